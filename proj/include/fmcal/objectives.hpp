#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fmcal/pgps.hpp"

namespace fmcal {

// mean, standard deviation (n-1 denominator), and standardized third/fourth
// moments. skewness/kurtosis are undefined when the series is constant.
// kurtosis here is the raw standardized fourth moment, not excess.
struct MomentVector {
    double mean = 0.0;
    double stdev = 0.0;
    std::optional<double> skewness;
    std::optional<double> kurtosis;

    bool defined() const { return skewness.has_value() && kurtosis.has_value(); }
};

// pre: series length >= 2
MomentVector moments(std::span<const double> series);

// Two-sample Kolmogorov-Smirnov statistic: sup over pooled values of the
// absolute ECDF gap. Exact in the achieved-fraction arithmetic (each gap is
// |i/n - j/m| for integer counts). pre: both samples non-empty.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Large-sample two-sided acceptance threshold at level alpha for sample
// sizes n_target and n_sim.
double ks_critical_value(std::int64_t n_target, std::int64_t n_sim, double alpha);

// Unweighted mean of squared moment gaps. Undefined sim moments are the
// caller's concern; throws if either side is undefined.
double msm_distance(const MomentVector& target, const MomentVector& sim);

// r_t = ln s_{t+1} - ln s_t. pre: length >= 2, all values positive.
std::vector<double> log_returns(std::span<const double> series);

// Keeps every stride-th sample (indices stride-1, 2*stride-1, ...).
std::vector<double> downsample(std::span<const double> series, int stride);

enum class ObjectiveTag { KS, MSM };

struct ObjectiveKind {
    ObjectiveTag tag = ObjectiveTag::KS;
    // Optional externally supplied target moments; when absent they are
    // computed from the target series.
    std::optional<MomentVector> reference_moments;
};

// Penalty returned by the MSM objective when a simulated series is constant
// and its higher moments are undefined.
inline constexpr double kMsmDegeneratePenalty = 1e6;

// A fixed target plus simulation settings, callable as the scalar objective
// f(params, seed) used by the calibrators. Downsampling with stride > 1 is
// applied to both target and simulated series before scoring.
class Objective {
public:
    // pre: target length equals sim.horizon; throws std::invalid_argument
    // otherwise, or when an MSM target has undefined moments.
    Objective(ObjectiveKind kind, std::vector<double> target, SimConfig sim,
              int downsample_stride = 1);

    double operator()(const PgpsParams& params, std::uint64_t seed) const;

    // Scores an already-simulated full-frequency series against the target.
    double score_series(std::span<const double> sim_series) const;

    const SimConfig& sim_config() const { return sim_; }
    ObjectiveTag tag() const { return kind_.tag; }
    int downsample_stride() const { return stride_; }
    const MomentVector& target_moments() const { return target_moments_; }
    std::size_t scored_length() const { return target_ds_sorted_.size(); }

private:
    ObjectiveKind kind_;
    SimConfig sim_;
    int stride_;
    std::vector<double> target_ds_sorted_;
    MomentVector target_moments_;
};

// Convenience wrapper: simulate once and score.
double evaluate(const ObjectiveKind& kind, std::span<const double> target,
                const PgpsParams& params, const SimConfig& sim, std::uint64_t seed,
                int downsample_stride = 1);

}  // namespace fmcal
