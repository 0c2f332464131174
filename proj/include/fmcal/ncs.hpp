#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "fmcal/rng.hpp"

namespace fmcal {

// One Gaussian search process: diagonal covariance, a fitness score from its
// latest samples, and a diversity score against the rest of the population.
struct SearchProcess {
    std::vector<double> mean;
    std::vector<double> var_diag;
    double score_f = 0.0;
    double score_d = 0.0;
    // latest evaluated samples as (position, objective value)
    std::vector<std::pair<std::vector<double>, double>> last_samples;
};

struct NcsConfig {
    int num_processes = 10;      // population size
    int samples_per_process = 1; // evaluations per process per iteration
    std::int64_t budget_evals = 10000;

    // replace-probability schedule for the ambiguous selection case, affine
    // from beta_start at iteration 0 to beta_end at the final iteration
    double beta_start = 0.7;
    double beta_end = 0.3;

    // exploration gate schedule
    double epsilon0 = 0.2;
    double rho = 0.9;

    // global step-size adaptation: every sigma_epoch iterations all process
    // variances scale up when the replacement rate beat 1/5, down otherwise
    int sigma_epoch = 10;

    std::vector<std::pair<double, double>> bounds;

    // Which replacement rule handles the two mixed fitness/diversity cases.
    // Standard: an offspring that gains diversity but loses fitness replaces
    // with probability beta, and one that gains fitness but loses diversity
    // replaces only while the exploration gate is open. Swapped: the
    // diversity-gaining loser is always kept out, the fitness-gaining one
    // replaces with probability 1 - beta, and the doubly-worse offspring
    // gets the gate.
    enum class CaseMapping { Standard, Swapped };
    CaseMapping case_mapping = CaseMapping::Standard;

    // Diversity score: ClosedForm uses the analytic Bhattacharyya distance
    // between diagonal Gaussians; Sampled plugs the latest sample positions
    // into the density ratio form.
    enum class DiversityMode { ClosedForm, Sampled };
    DiversityMode diversity = DiversityMode::ClosedForm;

    // Initial per-dimension spread (high - low) / num_processes, interpreted
    // as a standard deviation by default or literally as the variance.
    enum class SpreadInit { AsStdDev, AsVariance };
    SpreadInit spread_init = SpreadInit::AsStdDev;
};

struct TraceRow {
    int iteration = 0;
    std::int64_t evals = 0;
    double best_f = 0.0;
    double mean_f = 0.0;
    double epsilon = 0.0;
    double phi = 0.0;
};

struct CalibrationResult {
    std::vector<double> best_params;
    double best_value = 0.0;
    std::uint64_t best_eval_seed = 0;  // seed that produced the best evaluation
    std::vector<TraceRow> trace;
    std::int64_t evals_used = 0;
    std::uint64_t seed = 0;
};

// Objective adapter: parameter vector plus a per-evaluation seed.
using ObjectiveFn = std::function<double(std::span<const double>, std::uint64_t)>;

// Affine schedule clamped to [0, g_max]; g_max <= 0 returns beta_end.
double beta_schedule(int g, int g_max, const NcsConfig& cfg);

// Closed-form Bhattacharyya distance between diagonal Gaussians.
double bhattacharyya_diag(std::span<const double> mean1, std::span<const double> var1,
                          std::span<const double> mean2, std::span<const double> var2);

// Minimum Bhattacharyya distance from processes[i] to every other process.
double diversity_closed_form(std::size_t i, const std::vector<SearchProcess>& processes);

// Self-normalized importance-weighted fitness of a sample set under the
// process density. One sample degenerates to its plain objective value.
double expected_objective(const std::vector<std::pair<std::vector<double>, double>>& samples,
                          std::span<const double> mean, std::span<const double> var_diag);

enum class SelectDecision { KeepParent, ReplaceWithOffspring };

// Replacement rule for one process given (fitness, diversity) of parent and
// offspring. Lower f is better, higher d is better; ties keep the parent.
// u01 resolves the probabilistic case.
SelectDecision select_process(std::pair<double, double> parent_fd,
                              std::pair<double, double> offspring_fd, int g, int g_max,
                              double phi, double epsilon, double u01, const NcsConfig& cfg);

// epsilon_t update: decay by rho while the gate was passing, reset to
// epsilon0 otherwise.
double update_epsilon(double epsilon_prev, double phi_prev, double epsilon0, double rho);

// Reflects x into [lo, hi].
double reflect_into(double x, double lo, double hi);

// Population setup: means uniform in the bounds, spread from the box width.
std::vector<SearchProcess> init_processes(const NcsConfig& cfg, Rng& rng);

// Runs the calibration until the evaluation budget would be exceeded.
// Deterministic for fixed (cfg, seed) regardless of thread count.
CalibrationResult calibrate(const ObjectiveFn& objective, const NcsConfig& cfg,
                            std::uint64_t seed, int threads = 1);

// Uniform random search over the same bounds, same budget accounting; the
// baseline the calibrator is judged against.
CalibrationResult random_search(const ObjectiveFn& objective,
                                const std::vector<std::pair<double, double>>& bounds,
                                std::int64_t budget_evals, std::uint64_t seed,
                                int threads = 1);

}  // namespace fmcal
