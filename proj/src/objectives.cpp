#include "fmcal/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fmcal {

namespace {

// Walks the pooled distinct values of two sorted samples and tracks the
// largest ECDF gap. Counts stay integers until the final division, so equal
// inputs give bit-identical results regardless of call site.
double ks_sorted(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < a.size() || j < b.size()) {
        double v;
        if (i < a.size() && j < b.size()) {
            v = std::min(a[i], b[j]);
        } else if (i < a.size()) {
            v = a[i];
        } else {
            v = b[j];
        }
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        const double gap = std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m);
        if (gap > best) best = gap;
    }
    return best;
}

}  // namespace

MomentVector moments(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 2) throw std::invalid_argument("moments need at least 2 samples");
    double sum = 0.0;
    for (const double x : series) sum += x;
    const double mean = sum / static_cast<double>(n);
    double m2 = 0.0;
    for (const double x : series) {
        const double d = x - mean;
        m2 += d * d;
    }
    const double denom = static_cast<double>(n - 1);
    MomentVector out;
    out.mean = mean;
    out.stdev = std::sqrt(m2 / denom);
    if (out.stdev == 0.0) return out;  // constant series: higher moments undefined
    double s3 = 0.0, s4 = 0.0;
    for (const double x : series) {
        const double z = (x - mean) / out.stdev;
        const double z2 = z * z;
        s3 += z2 * z;
        s4 += z2 * z2;
    }
    out.skewness = s3 / denom;
    out.kurtosis = s4 / denom;
    return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks: samples must be non-empty");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return ks_sorted(sa, sb);
}

double ks_critical_value(std::int64_t n_target, std::int64_t n_sim, double alpha) {
    if (n_target < 1 || n_sim < 1)
        throw std::invalid_argument("ks critical value: sample sizes must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("ks critical value: alpha must lie in (0, 1)");
    const double n = static_cast<double>(n_target);
    const double m = static_cast<double>(n_sim);
    return std::sqrt(-(n + m) * std::log(alpha / 2.0) / (2.0 * n * m));
}

double msm_distance(const MomentVector& target, const MomentVector& sim) {
    if (!target.defined() || !sim.defined())
        throw std::invalid_argument("msm distance: moments undefined for a constant series");
    const double d1 = sim.mean - target.mean;
    const double d2 = sim.stdev - target.stdev;
    const double d3 = *sim.skewness - *target.skewness;
    const double d4 = *sim.kurtosis - *target.kurtosis;
    return (d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4) / 4.0;
}

std::vector<double> log_returns(std::span<const double> series) {
    if (series.size() < 2) throw std::invalid_argument("log returns need at least 2 samples");
    std::vector<double> out;
    out.reserve(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        if (!(series[i] > 0.0) || !(series[i + 1] > 0.0))
            throw std::invalid_argument("log returns need positive prices");
        out.push_back(std::log(series[i + 1]) - std::log(series[i]));
    }
    return out;
}

std::vector<double> downsample(std::span<const double> series, int stride) {
    if (stride < 1) throw std::invalid_argument("downsample stride must be >= 1");
    std::vector<double> out;
    out.reserve(series.size() / static_cast<std::size_t>(stride));
    for (std::size_t i = static_cast<std::size_t>(stride) - 1; i < series.size();
         i += static_cast<std::size_t>(stride)) {
        out.push_back(series[i]);
    }
    return out;
}

Objective::Objective(ObjectiveKind kind, std::vector<double> target, SimConfig sim,
                     int downsample_stride)
    : kind_(kind), sim_(sim), stride_(downsample_stride) {
    if (static_cast<int>(target.size()) != sim_.horizon)
        throw std::invalid_argument("target length must equal the simulation horizon");
    if (stride_ < 1) throw std::invalid_argument("downsample stride must be >= 1");
    std::vector<double> ds = downsample(target, stride_);
    if (ds.empty())
        throw std::invalid_argument("downsample stride leaves no target samples");
    if (kind_.reference_moments) {
        target_moments_ = *kind_.reference_moments;
    } else if (ds.size() >= 2) {
        target_moments_ = moments(ds);
    }
    if (kind_.tag == ObjectiveTag::MSM && !target_moments_.defined())
        throw std::invalid_argument("msm objective needs a target with defined moments");
    std::sort(ds.begin(), ds.end());
    target_ds_sorted_ = std::move(ds);
}

double Objective::score_series(std::span<const double> sim_series) const {
    if (static_cast<int>(sim_series.size()) != sim_.horizon)
        throw std::invalid_argument("simulated series length must equal the horizon");
    std::vector<double> ds = downsample(sim_series, stride_);
    if (kind_.tag == ObjectiveTag::KS) {
        std::sort(ds.begin(), ds.end());
        return ks_sorted(target_ds_sorted_, ds);
    }
    const MomentVector m = moments(ds);
    if (!m.defined()) return kMsmDegeneratePenalty;
    return msm_distance(target_moments_, m);
}

double Objective::operator()(const PgpsParams& params, std::uint64_t seed) const {
    const MidPriceSeries sim = simulate(params, sim_, seed);
    return score_series(sim.values);
}

double evaluate(const ObjectiveKind& kind, std::span<const double> target,
                const PgpsParams& params, const SimConfig& sim, std::uint64_t seed,
                int downsample_stride) {
    const Objective obj(kind, std::vector<double>(target.begin(), target.end()), sim,
                        downsample_stride);
    return obj(params, seed);
}

}  // namespace fmcal
