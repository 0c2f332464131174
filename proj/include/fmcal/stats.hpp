#pragma once

#include <span>
#include <vector>

namespace fmcal {

struct RankSumResult {
    double u = 0.0;  // Mann-Whitney U of the first sample
    double p = 0.0;  // two-sided p-value
};

// Two-sided Mann-Whitney/Wilcoxon rank-sum test with midrank tie handling.
// Exact by enumeration of all rank labelings when the pooled size is <= 12;
// normal approximation with tie correction and continuity correction above
// that. Identical samples give p = 1. pre: both samples non-empty.
RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

// Midranks of the pooled sample sizes (na + nb), first na entries belong to
// a. Exposed for testing.
std::vector<double> pooled_midranks(std::span<const double> a, std::span<const double> b);

double median(std::span<const double> values);
double sample_stdev(std::span<const double> values);  // n-1 denominator; 0 for n < 2

}  // namespace fmcal
