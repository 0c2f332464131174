#include "fmcal/ncs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fmcal/parallel.hpp"

namespace fmcal {

namespace {

constexpr std::uint64_t kStreamSample = 11;
constexpr std::uint64_t kStreamSelect = 12;
constexpr std::uint64_t kStreamEval = 13;

constexpr double kSigmaGain = 1.05;  // 1/5 success rule step
constexpr double kSuccessRate = 0.2;

void validate(const NcsConfig& cfg) {
    if (cfg.num_processes < 2)
        throw std::invalid_argument("need at least 2 search processes");
    if (cfg.samples_per_process < 1)
        throw std::invalid_argument("samples_per_process must be >= 1");
    if (cfg.bounds.empty()) throw std::invalid_argument("bounds must be non-empty");
    for (const auto& [lo, hi] : cfg.bounds)
        if (!(lo < hi)) throw std::invalid_argument("each bound must satisfy lo < hi");
    if (!(cfg.epsilon0 > 0.0 && cfg.epsilon0 < 1.0))
        throw std::invalid_argument("epsilon0 must lie in (0, 1)");
    if (!(cfg.rho > 0.0 && cfg.rho <= 1.0))
        throw std::invalid_argument("rho must lie in (0, 1]");
    if (cfg.sigma_epoch < 1) throw std::invalid_argument("sigma_epoch must be >= 1");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(cfg.beta_start) || !unit(cfg.beta_end))
        throw std::invalid_argument("beta schedule endpoints must lie in [0, 1]");
}

// Distance of a candidate distribution (with its latest samples, for the
// sampled mode) to the nearest other member of a population snapshot.
double min_distance_against(const SearchProcess& cand,
                            const std::vector<SearchProcess>& others, std::size_t skip,
                            NcsConfig::DiversityMode mode) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < others.size(); ++j) {
        if (j == skip) continue;
        const SearchProcess& o = others[j];
        double d;
        if (mode == NcsConfig::DiversityMode::ClosedForm) {
            d = bhattacharyya_diag(cand.mean, cand.var_diag, o.mean, o.var_diag);
        } else {
            // density-ratio form evaluated at the candidate's sample
            // positions instead of its mean
            if (cand.last_samples.empty())
                throw std::logic_error("sampled diversity needs evaluated samples");
            double acc = 0.0;
            for (const auto& [x, f] : cand.last_samples)
                acc += bhattacharyya_diag(x, cand.var_diag, o.mean, o.var_diag);
            d = acc / static_cast<double>(cand.last_samples.size());
        }
        if (d < best) best = d;
    }
    return best;
}

}  // namespace

double beta_schedule(int g, int g_max, const NcsConfig& cfg) {
    if (g_max <= 0) return cfg.beta_end;
    const double t = std::clamp(static_cast<double>(g) / static_cast<double>(g_max), 0.0, 1.0);
    return cfg.beta_start + (cfg.beta_end - cfg.beta_start) * t;
}

double bhattacharyya_diag(std::span<const double> mean1, std::span<const double> var1,
                          std::span<const double> mean2, std::span<const double> var2) {
    const std::size_t dim = mean1.size();
    if (dim == 0 || var1.size() != dim || mean2.size() != dim || var2.size() != dim)
        throw std::invalid_argument("distance arguments must share a positive dimension");
    double quad = 0.0;
    double logterm = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        if (!(var1[d] > 0.0) || !(var2[d] > 0.0))
            throw std::invalid_argument("variances must be positive");
        const double vbar = 0.5 * (var1[d] + var2[d]);
        const double dm = mean1[d] - mean2[d];
        quad += dm * dm / vbar;
        logterm += std::log(vbar) - 0.5 * (std::log(var1[d]) + std::log(var2[d]));
    }
    return quad / 8.0 + 0.5 * logterm;
}

double diversity_closed_form(std::size_t i, const std::vector<SearchProcess>& processes) {
    if (processes.size() < 2)
        throw std::invalid_argument("diversity needs at least 2 processes");
    return min_distance_against(processes[i], processes, i,
                                NcsConfig::DiversityMode::ClosedForm);
}

double expected_objective(const std::vector<std::pair<std::vector<double>, double>>& samples,
                          std::span<const double> mean, std::span<const double> var_diag) {
    if (samples.empty()) throw std::invalid_argument("expected_objective needs samples");
    if (samples.size() == 1) return samples[0].second;

    std::vector<double> logp(samples.size(), 0.0);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& x = samples[k].first;
        if (x.size() != mean.size())
            throw std::invalid_argument("sample dimension mismatch");
        double lp = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) {
            const double v = var_diag[d];
            if (!(v > 0.0)) throw std::invalid_argument("variances must be positive");
            const double dm = x[d] - mean[d];
            lp += -0.5 * std::log(2.0 * M_PI * v) - dm * dm / (2.0 * v);
        }
        logp[k] = lp;
    }
    const double top = *std::max_element(logp.begin(), logp.end());
    double wsum = 0.0, fsum = 0.0;
    if (std::isfinite(top)) {
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double w = std::exp(logp[k] - top);
            wsum += w;
            fsum += w * samples[k].second;
        }
    }
    if (!(wsum > 0.0) || !std::isfinite(wsum)) {
        // all densities vanished; fall back to the plain average
        double acc = 0.0;
        for (const auto& s : samples) acc += s.second;
        return acc / static_cast<double>(samples.size());
    }
    return fsum / wsum;
}

SelectDecision select_process(std::pair<double, double> parent_fd,
                              std::pair<double, double> offspring_fd, int g, int g_max,
                              double phi, double epsilon, double u01, const NcsConfig& cfg) {
    const auto [pf, pd] = parent_fd;
    const auto [of, od] = offspring_fd;
    if (of == pf || od == pd) return SelectDecision::KeepParent;
    const bool f_gain = of < pf;  // lower objective is better
    const bool d_gain = od > pd;  // more separation is better
    if (f_gain && d_gain) return SelectDecision::ReplaceWithOffspring;
    const double beta = beta_schedule(g, g_max, cfg);
    if (cfg.case_mapping == NcsConfig::CaseMapping::Standard) {
        if (!f_gain && d_gain)
            return u01 < beta ? SelectDecision::ReplaceWithOffspring
                              : SelectDecision::KeepParent;
        if (f_gain && !d_gain)
            return phi > epsilon ? SelectDecision::ReplaceWithOffspring
                                 : SelectDecision::KeepParent;
        return SelectDecision::KeepParent;
    }
    if (!f_gain && d_gain) return SelectDecision::KeepParent;
    if (f_gain && !d_gain)
        return u01 < 1.0 - beta ? SelectDecision::ReplaceWithOffspring
                                : SelectDecision::KeepParent;
    return phi > epsilon ? SelectDecision::ReplaceWithOffspring : SelectDecision::KeepParent;
}

double update_epsilon(double epsilon_prev, double phi_prev, double epsilon0, double rho) {
    return phi_prev > epsilon_prev ? rho * epsilon_prev : epsilon0;
}

double reflect_into(double x, double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("bounds must satisfy lo < hi");
    const double w = hi - lo;
    double y = std::fmod(x - lo, 2.0 * w);
    if (y < 0.0) y += 2.0 * w;
    return y <= w ? lo + y : lo + (2.0 * w - y);
}

std::vector<SearchProcess> init_processes(const NcsConfig& cfg, Rng& rng) {
    validate(cfg);
    const std::size_t dim = cfg.bounds.size();
    std::vector<SearchProcess> out(static_cast<std::size_t>(cfg.num_processes));
    for (auto& proc : out) {
        proc.mean.resize(dim);
        proc.var_diag.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            const auto [lo, hi] = cfg.bounds[d];
            proc.mean[d] = rng.uniform(lo, hi);
            const double spread = (hi - lo) / static_cast<double>(cfg.num_processes);
            proc.var_diag[d] = cfg.spread_init == NcsConfig::SpreadInit::AsStdDev
                                   ? spread * spread
                                   : spread;
        }
    }
    return out;
}

CalibrationResult calibrate(const ObjectiveFn& objective, const NcsConfig& cfg,
                            std::uint64_t seed, int threads) {
    validate(cfg);
    const int lambda = cfg.num_processes;
    const int nsamp = cfg.samples_per_process;
    const std::int64_t per_iter = static_cast<std::int64_t>(lambda) * nsamp;
    if (cfg.budget_evals < 2 * per_iter)
        throw std::invalid_argument("budget too small: need at least two iterations");
    const int g_max = static_cast<int>(cfg.budget_evals / per_iter) - 1;
    const std::size_t dim = cfg.bounds.size();

    Rng sample_rng(derive_seed(seed, kStreamSample));
    Rng select_rng(derive_seed(seed, kStreamSelect));
    const std::uint64_t eval_base = derive_seed(seed, kStreamEval);

    CalibrationResult res;
    res.seed = seed;
    res.best_value = std::numeric_limits<double>::infinity();

    std::int64_t evals = 0;

    struct Slot {
        std::size_t proc;
        std::vector<double> x;
        std::uint64_t eval_seed;
        double f;
    };

    // Draws nsamp candidates per process, evaluates them (possibly across
    // threads), and refreshes score_f. Candidate draws happen sequentially
    // up front so thread count never touches the random stream.
    auto draw_and_eval = [&](std::vector<SearchProcess>& procs) {
        std::vector<Slot> slots;
        slots.reserve(procs.size() * static_cast<std::size_t>(nsamp));
        for (std::size_t i = 0; i < procs.size(); ++i) {
            for (int k = 0; k < nsamp; ++k) {
                Slot s;
                s.proc = i;
                s.x.resize(dim);
                for (std::size_t d = 0; d < dim; ++d) {
                    const auto [lo, hi] = cfg.bounds[d];
                    const double draw =
                        sample_rng.normal(procs[i].mean[d], std::sqrt(procs[i].var_diag[d]));
                    s.x[d] = reflect_into(draw, lo, hi);
                }
                s.eval_seed =
                    derive_seed(eval_base, static_cast<std::uint64_t>(
                                               evals + static_cast<std::int64_t>(slots.size())));
                s.f = 0.0;
                slots.push_back(std::move(s));
            }
        }
        parallel_for(slots.size(), threads,
                     [&](std::size_t s) { slots[s].f = objective(slots[s].x, slots[s].eval_seed); });
        for (auto& p : procs) p.last_samples.clear();
        for (auto& s : slots) {
            if (s.f < res.best_value) {
                res.best_value = s.f;
                res.best_params = s.x;
                res.best_eval_seed = s.eval_seed;
            }
            procs[s.proc].last_samples.emplace_back(std::move(s.x), s.f);
            ++evals;
        }
        for (auto& p : procs)
            p.score_f = expected_objective(p.last_samples, p.mean, p.var_diag);
    };

    auto mean_score = [](const std::vector<SearchProcess>& procs) {
        double acc = 0.0;
        for (const auto& p : procs) acc += p.score_f;
        return acc / static_cast<double>(procs.size());
    };

    std::vector<SearchProcess> processes = init_processes(cfg, sample_rng);
    draw_and_eval(processes);
    for (std::size_t i = 0; i < processes.size(); ++i)
        processes[i].score_d = min_distance_against(processes[i], processes, i, cfg.diversity);

    res.trace.push_back(TraceRow{0, evals, res.best_value, mean_score(processes),
                                 cfg.epsilon0, 1.0});

    double phi_prev = 1.0;  // init counts as full replacement
    double epsilon = cfg.epsilon0;
    std::int64_t epoch_replacements = 0;

    for (int g = 1; g <= g_max; ++g) {
        const std::vector<SearchProcess> snapshot = processes;

        std::vector<SearchProcess> offspring(processes.size());
        for (std::size_t i = 0; i < processes.size(); ++i) {
            offspring[i].mean.resize(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                const auto [lo, hi] = cfg.bounds[d];
                const double draw = sample_rng.normal(processes[i].mean[d],
                                                      std::sqrt(processes[i].var_diag[d]));
                offspring[i].mean[d] = reflect_into(draw, lo, hi);
            }
            offspring[i].var_diag = processes[i].var_diag;
        }
        draw_and_eval(offspring);

        int replaced = 0;
        for (std::size_t i = 0; i < processes.size(); ++i) {
            const double parent_d = min_distance_against(snapshot[i], snapshot, i, cfg.diversity);
            const double child_d = min_distance_against(offspring[i], snapshot, i, cfg.diversity);
            const double u = select_rng.u01();  // always consumed, schedule-stable
            const SelectDecision decision =
                select_process({snapshot[i].score_f, parent_d}, {offspring[i].score_f, child_d},
                               g, g_max, phi_prev, epsilon, u, cfg);
            if (decision == SelectDecision::ReplaceWithOffspring) {
                processes[i] = std::move(offspring[i]);
                processes[i].score_d = child_d;
                ++replaced;
            } else {
                processes[i].score_d = parent_d;
            }
        }

        const double phi = static_cast<double>(replaced) / static_cast<double>(lambda);
        res.trace.push_back(TraceRow{g, evals, res.best_value, mean_score(processes), epsilon, phi});

        epoch_replacements += replaced;
        if (g % cfg.sigma_epoch == 0) {
            const double rate = static_cast<double>(epoch_replacements) /
                                (static_cast<double>(lambda) * cfg.sigma_epoch);
            const double factor = rate > kSuccessRate ? kSigmaGain : 1.0 / kSigmaGain;
            for (auto& p : processes)
                for (auto& v : p.var_diag) v *= factor * factor;
            epoch_replacements = 0;
        }

        const double next_epsilon = update_epsilon(epsilon, phi, cfg.epsilon0, cfg.rho);
        phi_prev = phi;
        epsilon = next_epsilon;
    }

    res.evals_used = evals;
    return res;
}

CalibrationResult random_search(const ObjectiveFn& objective,
                                const std::vector<std::pair<double, double>>& bounds,
                                std::int64_t budget_evals, std::uint64_t seed, int threads) {
    if (bounds.empty()) throw std::invalid_argument("bounds must be non-empty");
    for (const auto& [lo, hi] : bounds)
        if (!(lo < hi)) throw std::invalid_argument("each bound must satisfy lo < hi");
    if (budget_evals < 1) throw std::invalid_argument("budget too small");

    Rng sample_rng(derive_seed(seed, kStreamSample));
    const std::uint64_t eval_base = derive_seed(seed, kStreamEval);
    const std::size_t dim = bounds.size();
    const std::size_t n = static_cast<std::size_t>(budget_evals);

    std::vector<std::vector<double>> xs(n);
    std::vector<std::uint64_t> seeds(n);
    std::vector<double> fs(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        xs[k].resize(dim);
        for (std::size_t d = 0; d < dim; ++d)
            xs[k][d] = sample_rng.uniform(bounds[d].first, bounds[d].second);
        seeds[k] = derive_seed(eval_base, k);
    }
    parallel_for(n, threads, [&](std::size_t k) { fs[k] = objective(xs[k], seeds[k]); });

    CalibrationResult res;
    res.seed = seed;
    res.best_value = std::numeric_limits<double>::infinity();
    res.trace.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (fs[k] < res.best_value) {
            res.best_value = fs[k];
            res.best_params = xs[k];
            res.best_eval_seed = seeds[k];
        }
        res.trace.push_back(TraceRow{static_cast<int>(k), static_cast<std::int64_t>(k + 1),
                                     res.best_value, fs[k], 0.0, 0.0});
    }
    res.evals_used = budget_evals;
    return res;
}

}  // namespace fmcal
