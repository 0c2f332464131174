#include "fmcal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace fmcal {

std::vector<double> pooled_midranks(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size() + b.size();
    std::vector<double> pooled;
    pooled.reserve(n);
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        // positions i..j share one value; midrank is their average 1-based rank
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

namespace {

// exact two-sided p: fraction of rank labelings at least as extreme in
// |U - nm/2| as observed
double exact_p(const std::vector<double>& ranks, std::size_t na, double u_obs) {
    const std::size_t n = ranks.size();
    const std::size_t nb = n - na;
    const double center = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
    const double d_obs = std::abs(u_obs - center);
    const double offset = static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;

    std::vector<std::size_t> comb(na);
    std::iota(comb.begin(), comb.end(), 0);
    std::uint64_t total = 0, extreme = 0;
    for (;;) {
        double rank_sum = 0.0;
        for (const std::size_t idx : comb) rank_sum += ranks[idx];
        ++total;
        if (std::abs((rank_sum - offset) - center) >= d_obs) ++extreme;
        // advance to the next lexicographic combination; comb[k] maxes out
        // at n - na + k
        std::size_t k = na;
        while (k > 0 && comb[k - 1] == n - na + (k - 1)) --k;
        if (k == 0) break;
        ++comb[k - 1];
        for (std::size_t m = k; m < na; ++m) comb[m] = comb[m - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("rank-sum test needs two non-empty samples");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;
    const std::vector<double> ranks = pooled_midranks(a, b);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];
    const double u = rank_sum_a - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;

    RankSumResult res;
    res.u = u;
    if (n <= 12) {
        res.p = exact_p(ranks, na, u);
        return res;
    }

    // tie correction over pooled value multiplicities
    std::vector<double> pooled;
    pooled.reserve(n);
    pooled.assign(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[j + 1] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double dn = static_cast<double>(n);
    const double var = (static_cast<double>(na) * static_cast<double>(nb) / 12.0) *
                       ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (!(var > 0.0)) {
        res.p = 1.0;  // all observations identical
        return res;
    }
    const double center = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
    const double z = std::max(0.0, std::abs(u - center) - 0.5) / std::sqrt(var);
    res.p = std::erfc(z / std::sqrt(2.0));
    return res;
}

double median(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_stdev(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / static_cast<double>(n);
    double m2 = 0.0;
    for (const double v : values) {
        const double d = v - mean;
        m2 += d * d;
    }
    return std::sqrt(m2 / static_cast<double>(n - 1));
}

}  // namespace fmcal
