#include "fmcal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fmcal/series_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace fmcal {

namespace {

constexpr std::uint64_t kTagRun = 21;
constexpr std::uint64_t kTagGenParams = 31;
constexpr std::uint64_t kTagGenSim = 32;
constexpr std::uint64_t kTagCompare = 41;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json load_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

const char* objective_name(ObjectiveTag t) { return t == ObjectiveTag::KS ? "ks" : "msm"; }

const char* optimizer_name(OptimizerKind o) {
    switch (o) {
        case OptimizerKind::Ncs: return "ncs";
        case OptimizerKind::Random: return "random";
        default: return "both";
    }
}

ordered_json sim_to_json(const SimConfig& s) {
    ordered_json j;
    j["n_agents"] = s.n_agents;
    j["horizon"] = s.horizon;
    j["initial_price"] = s.initial_price;
    j["msd_samples"] = s.msd_samples;
    j["msd_floor"] = s.msd_floor;
    j["ask_offset_inward"] = s.ask_offset_inward;
    j["shuffle_agents"] = s.shuffle_agents;
    return j;
}

SimConfig sim_from_json(const json& j) {
    SimConfig s;
    s.n_agents = j.at("n_agents").get<int>();
    s.horizon = j.at("horizon").get<int>();
    s.initial_price = j.at("initial_price").get<Price>();
    s.msd_samples = j.at("msd_samples").get<int>();
    s.msd_floor = j.value("msd_floor", 1e-12);
    s.ask_offset_inward = j.value("ask_offset_inward", false);
    s.shuffle_agents = j.value("shuffle_agents", false);
    return s;
}

ordered_json ncs_to_json(const NcsConfig& c) {
    ordered_json j;
    j["num_processes"] = c.num_processes;
    j["samples_per_process"] = c.samples_per_process;
    j["beta_start"] = c.beta_start;
    j["beta_end"] = c.beta_end;
    j["epsilon0"] = c.epsilon0;
    j["rho"] = c.rho;
    j["sigma_epoch"] = c.sigma_epoch;
    j["case_mapping"] =
        c.case_mapping == NcsConfig::CaseMapping::Standard ? "standard" : "swapped";
    j["diversity"] =
        c.diversity == NcsConfig::DiversityMode::ClosedForm ? "closed_form" : "sampled";
    j["spread_init"] =
        c.spread_init == NcsConfig::SpreadInit::AsStdDev ? "stddev" : "variance";
    return j;
}

NcsConfig ncs_from_json(const json& j) {
    NcsConfig c;
    c.num_processes = j.at("num_processes").get<int>();
    c.samples_per_process = j.at("samples_per_process").get<int>();
    c.beta_start = j.at("beta_start").get<double>();
    c.beta_end = j.at("beta_end").get<double>();
    c.epsilon0 = j.at("epsilon0").get<double>();
    c.rho = j.at("rho").get<double>();
    c.sigma_epoch = j.at("sigma_epoch").get<int>();
    const std::string cm = j.value("case_mapping", "standard");
    c.case_mapping = cm == "swapped" ? NcsConfig::CaseMapping::Swapped
                                     : NcsConfig::CaseMapping::Standard;
    const std::string dv = j.value("diversity", "closed_form");
    c.diversity = dv == "sampled" ? NcsConfig::DiversityMode::Sampled
                                  : NcsConfig::DiversityMode::ClosedForm;
    const std::string sp = j.value("spread_init", "stddev");
    c.spread_init = sp == "variance" ? NcsConfig::SpreadInit::AsVariance
                                     : NcsConfig::SpreadInit::AsStdDev;
    return c;
}

ordered_json campaign_to_json(const CampaignConfig& cfg) {
    ordered_json j;
    j["objective"] = objective_name(cfg.objective);
    j["optimizer"] = optimizer_name(cfg.optimizer);
    j["repeats"] = cfg.repeats;
    j["budget"] = cfg.budget;
    j["downsample"] = cfg.downsample;
    j["master_seed"] = cfg.master_seed;
    j["sim"] = sim_to_json(cfg.sim);
    j["ncs"] = ncs_to_json(cfg.ncs);
    ordered_json bounds = ordered_json::array();
    for (const auto& [lo, hi] : cfg.ncs.bounds) bounds.push_back({lo, hi});
    j["bounds"] = bounds;
    ordered_json target;
    target["source"] = cfg.target.source;
    target["length"] = cfg.target.values.size();
    if (cfg.target.gen_seed) target["gen_seed"] = *cfg.target.gen_seed;
    else target["gen_seed"] = nullptr;
    if (cfg.target.true_params) target["true_params"] = params_to_json(*cfg.target.true_params);
    else target["true_params"] = nullptr;
    target["values"] = cfg.target.values;
    j["target"] = target;
    return j;
}

CampaignConfig campaign_from_json(const json& j) {
    CampaignConfig cfg;
    cfg.objective =
        j.at("objective").get<std::string>() == "msm" ? ObjectiveTag::MSM : ObjectiveTag::KS;
    const std::string opt = j.at("optimizer").get<std::string>();
    cfg.optimizer = opt == "random"  ? OptimizerKind::Random
                    : opt == "both" ? OptimizerKind::Both
                                    : OptimizerKind::Ncs;
    cfg.repeats = j.at("repeats").get<int>();
    cfg.budget = j.at("budget").get<std::int64_t>();
    cfg.downsample = j.at("downsample").get<int>();
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.sim = sim_from_json(j.at("sim"));
    cfg.ncs = ncs_from_json(j.at("ncs"));
    cfg.ncs.budget_evals = cfg.budget;
    for (const auto& b : j.at("bounds"))
        cfg.ncs.bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
    const auto& t = j.at("target");
    cfg.target.source = t.at("source").get<std::string>();
    if (!t.at("gen_seed").is_null()) cfg.target.gen_seed = t.at("gen_seed").get<std::uint64_t>();
    if (!t.at("true_params").is_null())
        cfg.target.true_params = params_from_json(t.at("true_params"));
    cfg.target.values = t.at("values").get<std::vector<double>>();
    return cfg;
}

std::string config_tag(const CampaignConfig& cfg) {
    return hex64(fnv1a(campaign_to_json(cfg).dump()));
}

struct RunRecord {
    int run = 0;
    std::uint64_t seed = 0;
    double best_value = 0.0;
    std::vector<double> best_params;
    std::uint64_t best_eval_seed = 0;
    std::int64_t evals = 0;
};

RunRecord to_record(int run, std::uint64_t seed, const CalibrationResult& r) {
    RunRecord rec;
    rec.run = run;
    rec.seed = seed;
    rec.best_value = r.best_value;
    rec.best_params = r.best_params;
    rec.best_eval_seed = r.best_eval_seed;
    rec.evals = r.evals_used;
    return rec;
}

CalibrationResult to_result(const RunRecord& rec) {
    CalibrationResult r;
    r.seed = rec.seed;
    r.best_value = rec.best_value;
    r.best_params = rec.best_params;
    r.best_eval_seed = rec.best_eval_seed;
    r.evals_used = rec.evals;
    return r;
}

ordered_json arm_to_json(const RunRecord& rec) {
    ordered_json j;
    j["best_value"] = rec.best_value;
    j["best_params"] = params_to_json(PgpsParams::from_array(rec.best_params));
    j["best_eval_seed"] = rec.best_eval_seed;
    j["evals"] = rec.evals;
    return j;
}

RunRecord arm_from_json(int run, std::uint64_t seed, const json& j) {
    RunRecord rec;
    rec.run = run;
    rec.seed = seed;
    rec.best_value = j.at("best_value").get<double>();
    const auto arr = params_from_json(j.at("best_params")).to_array();
    rec.best_params.assign(arr.begin(), arr.end());
    rec.best_eval_seed = j.at("best_eval_seed").get<std::uint64_t>();
    rec.evals = j.at("evals").get<std::int64_t>();
    return rec;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const fs::path& path) {
    std::ostringstream out;
    out << "iteration,evals,best_f,mean_f,epsilon_t,phi_t\n";
    for (const auto& row : trace) {
        out << row.iteration << ',' << row.evals << ',' << format_double(row.best_f) << ','
            << format_double(row.mean_f) << ',' << format_double(row.epsilon) << ','
            << format_double(row.phi) << '\n';
    }
    write_text_file(path, out.str());
}

std::optional<MomentVector> safe_moments(std::span<const double> values, int stride) {
    const std::vector<double> ds = downsample(values, stride);
    if (ds.size() < 2) return std::nullopt;
    return moments(ds);
}

ordered_json build_report(const CampaignConfig& cfg, const std::string& tag,
                          const std::vector<RunRecord>& primary,
                          const std::vector<RunRecord>& baseline,
                          const std::optional<RankSumResult>& wilcoxon) {
    ordered_json rep;
    rep["campaign"] = campaign_to_json(cfg);
    rep["campaign"].erase("target");
    ordered_json tgt;
    tgt["source"] = cfg.target.source;
    tgt["length"] = cfg.target.values.size();
    if (cfg.target.gen_seed) tgt["gen_seed"] = *cfg.target.gen_seed;
    else tgt["gen_seed"] = nullptr;
    if (cfg.target.true_params) tgt["true_params"] = params_to_json(*cfg.target.true_params);
    else tgt["true_params"] = nullptr;
    rep["campaign"]["target"] = tgt;
    rep["campaign"]["config_tag"] = tag;

    ordered_json runs = ordered_json::array();
    std::vector<double> bests;
    int best_run = 0;
    for (std::size_t k = 0; k < primary.size(); ++k) {
        const RunRecord& rec = primary[k];
        ordered_json rj = arm_to_json(rec);
        rj["run"] = rec.run;
        rj["seed"] = rec.seed;
        if (!baseline.empty()) rj["baseline_best_value"] = baseline[k].best_value;
        runs.push_back(rj);
        bests.push_back(rec.best_value);
        if (rec.best_value < primary[best_run].best_value) best_run = static_cast<int>(k);
    }
    rep["runs"] = runs;

    double mean_best = 0.0;
    for (const double v : bests) mean_best += v;
    mean_best /= static_cast<double>(bests.size());

    ordered_json agg;
    agg["best_run"] = best_run;
    agg["best_value"] = primary[best_run].best_value;
    agg["mean_best"] = mean_best;
    agg["median_best"] = median(bests);
    agg["stdev_best"] = sample_stdev(bests);
    const std::size_t scored =
        downsample(cfg.target.values, cfg.downsample).size();
    if (cfg.objective == ObjectiveTag::KS && scored >= 1) {
        const double cv = ks_critical_value(static_cast<std::int64_t>(scored),
                                            static_cast<std::int64_t>(scored), 0.05);
        agg["ks_critical_value_alpha05"] = cv;
        agg["best_below_critical"] = primary[best_run].best_value < cv;
    }
    if (!baseline.empty()) {
        std::vector<double> base_bests;
        for (const auto& r : baseline) base_bests.push_back(r.best_value);
        double base_mean = 0.0;
        for (const double v : base_bests) base_mean += v;
        base_mean /= static_cast<double>(base_bests.size());
        ordered_json bj;
        bj["mean_best"] = base_mean;
        bj["median_best"] = median(base_bests);
        bj["stdev_best"] = sample_stdev(base_bests);
        agg["baseline"] = bj;
        if (wilcoxon) {
            ordered_json wj;
            wj["u"] = wilcoxon->u;
            wj["p"] = wilcoxon->p;
            agg["wilcoxon_vs_baseline"] = wj;
        }
    }
    rep["aggregate"] = agg;

    const RunRecord& champ = primary[best_run];
    const PgpsParams champ_params = PgpsParams::from_array(champ.best_params);
    SimConfig sim = cfg.sim;
    sim.horizon = static_cast<int>(cfg.target.values.size());
    const MidPriceSeries best_series = simulate(champ_params, sim, champ.best_eval_seed);
    ordered_json best;
    best["params"] = params_to_json(champ_params);
    best["value"] = champ.best_value;
    best["eval_seed"] = champ.best_eval_seed;
    const auto sim_m = safe_moments(best_series.values, cfg.downsample);
    const auto tgt_m = safe_moments(cfg.target.values, cfg.downsample);
    best["sim_moments"] = sim_m ? moments_to_json(*sim_m) : ordered_json(nullptr);
    best["target_moments"] = tgt_m ? moments_to_json(*tgt_m) : ordered_json(nullptr);
    rep["best"] = best;

    if (!cfg.output_dir.empty()) {
        std::ostringstream series_csv;
        write_series_csv(best_series.values, series_csv);
        write_text_file(fs::path(cfg.output_dir) / "best_series.csv", series_csv.str());
    }
    return rep;
}

}  // namespace

nlohmann::ordered_json params_to_json(const PgpsParams& p) {
    ordered_json j;
    const auto arr = p.to_array();
    for (int d = 0; d < PgpsParams::kDim; ++d) j[param_names()[d]] = arr[d];
    return j;
}

PgpsParams params_from_json(const json& j) {
    std::array<double, PgpsParams::kDim> arr{};
    for (int d = 0; d < PgpsParams::kDim; ++d)
        arr[d] = j.at(param_names()[d]).get<double>();
    return PgpsParams::from_array(arr);
}

nlohmann::ordered_json moments_to_json(const MomentVector& m) {
    ordered_json j;
    j["mean"] = m.mean;
    j["stdev"] = m.stdev;
    j["skewness"] = m.skewness ? ordered_json(*m.skewness) : ordered_json(nullptr);
    j["excess_kurtosis"] =
        m.kurtosis ? ordered_json(*m.kurtosis - 3.0) : ordered_json(nullptr);
    return j;
}

std::vector<TargetData> gen_synthetic_targets(
    int count, const std::vector<std::pair<double, double>>& bounds, const SimConfig& sim,
    std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("target count must be >= 1");
    if (bounds.size() != PgpsParams::kDim)
        throw std::invalid_argument("bounds must cover all 6 parameters");
    std::vector<TargetData> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Rng prm(derive_seed(seed, kTagGenParams, static_cast<std::uint64_t>(k)));
        std::array<double, PgpsParams::kDim> arr{};
        for (int d = 0; d < PgpsParams::kDim; ++d)
            arr[d] = prm.uniform(bounds[d].first, bounds[d].second);
        const PgpsParams params = PgpsParams::from_array(arr);
        const std::uint64_t sim_seed =
            derive_seed(seed, kTagGenSim, static_cast<std::uint64_t>(k));
        TargetData t;
        t.values = simulate(params, sim, sim_seed).values;
        t.source = "synthetic_" + std::to_string(k);
        t.true_params = params;
        t.gen_seed = sim_seed;
        out.push_back(std::move(t));
    }
    return out;
}

void write_targets(const std::vector<TargetData>& targets, const SimConfig& sim,
                   std::uint64_t seed, const std::string& out_dir) {
    fs::create_directories(out_dir);
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const fs::path csv = fs::path(out_dir) / ("target_" + std::to_string(k) + ".csv");
        write_series_csv_file(targets[k].values, csv.string());
        ordered_json j;
        j["params"] = params_to_json(*targets[k].true_params);
        j["seed"] = *targets[k].gen_seed;
        j["master_seed"] = seed;
        j["sim"] = sim_to_json(sim);
        write_text_file(fs::path(out_dir) / ("target_" + std::to_string(k) + ".json"),
                        dump_json(j));
    }
}

TargetSidecar read_target_sidecar(const std::string& path) {
    const ordered_json j = load_json_file(path);
    TargetSidecar s;
    s.params = params_from_json(j.at("params"));
    s.seed = j.at("seed").get<std::uint64_t>();
    s.sim = sim_from_json(j.at("sim"));
    return s;
}

CampaignOutcome run_calibration_campaign(const CampaignConfig& user_cfg) {
    CampaignConfig cfg = user_cfg;
    if (cfg.target.values.empty())
        throw std::invalid_argument("campaign needs a non-empty target series");
    if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    if (cfg.downsample < 1) throw std::invalid_argument("downsample must be >= 1");
    cfg.sim.horizon = static_cast<int>(cfg.target.values.size());
    if (cfg.ncs.bounds.empty()) {
        const auto db = default_bounds();
        cfg.ncs.bounds.assign(db.begin(), db.end());
    }
    cfg.ncs.budget_evals = cfg.budget;

    const ObjectiveKind kind{cfg.objective, std::nullopt};
    const Objective obj(kind, cfg.target.values, cfg.sim, cfg.downsample);
    const ObjectiveFn fn = [&obj](std::span<const double> x, std::uint64_t sd) {
        return obj(PgpsParams::from_array(x), sd);
    };

    const std::string tag = config_tag(cfg);
    const bool persist = !cfg.output_dir.empty();
    const fs::path dir(cfg.output_dir);
    if (persist) {
        fs::create_directories(dir);
        const fs::path cfg_path = dir / "campaign_config.json";
        if (fs::exists(cfg_path)) {
            const ordered_json prev = load_json_file(cfg_path);
            if (config_tag(campaign_from_json(prev)) != tag)
                throw std::runtime_error(
                    "output directory holds a campaign with a different configuration: " +
                    cfg_path.string());
        } else {
            write_text_file(cfg_path, dump_json(campaign_to_json(cfg)));
        }
    }

    const bool needs_primary = true;
    const bool needs_baseline = cfg.optimizer == OptimizerKind::Both;
    const bool primary_is_random = cfg.optimizer == OptimizerKind::Random;

    CampaignOutcome out;
    std::vector<RunRecord> primary, baseline;

    for (int k = 0; k < cfg.repeats; ++k) {
        const std::uint64_t run_seed =
            derive_seed(cfg.master_seed, kTagRun, static_cast<std::uint64_t>(k));
        const fs::path run_path = dir / ("run_" + std::to_string(k) + ".json");

        if (persist && fs::exists(run_path)) {
            const ordered_json rj = load_json_file(run_path);
            if (rj.at("config_tag").get<std::string>() != tag)
                throw std::runtime_error("run file from a different configuration: " +
                                         run_path.string());
            const char* primary_key = primary_is_random ? "random" : "ncs";
            primary.push_back(arm_from_json(k, run_seed, rj.at(primary_key)));
            out.runs.push_back(to_result(primary.back()));
            if (needs_baseline) {
                baseline.push_back(arm_from_json(k, run_seed, rj.at("random")));
                out.baseline_runs.push_back(to_result(baseline.back()));
            }
            continue;
        }

        CalibrationResult r_primary, r_baseline;
        if (primary_is_random) {
            r_primary =
                random_search(fn, cfg.ncs.bounds, cfg.budget, run_seed, cfg.threads);
        } else {
            r_primary = calibrate(fn, cfg.ncs, run_seed, cfg.threads);
        }
        if (needs_baseline)
            r_baseline =
                random_search(fn, cfg.ncs.bounds, cfg.budget, run_seed, cfg.threads);

        primary.push_back(to_record(k, run_seed, r_primary));
        out.runs.push_back(r_primary);
        if (needs_baseline) {
            baseline.push_back(to_record(k, run_seed, r_baseline));
            out.baseline_runs.push_back(r_baseline);
        }

        if (persist) {
            ordered_json rj;
            rj["run"] = k;
            rj["config_tag"] = tag;
            rj["seed"] = run_seed;
            if (!primary_is_random) rj["ncs"] = arm_to_json(primary.back());
            if (primary_is_random || needs_baseline)
                rj["random"] = arm_to_json(needs_baseline ? baseline.back() : primary.back());
            write_text_file(run_path, dump_json(rj));
            write_trace_csv(r_primary.trace,
                            dir / ("trace_" + std::to_string(k) + ".csv"));
            if (needs_baseline)
                write_trace_csv(r_baseline.trace,
                                dir / ("trace_random_" + std::to_string(k) + ".csv"));
        }
    }
    (void)needs_primary;

    out.best_run = 0;
    for (std::size_t k = 1; k < primary.size(); ++k)
        if (primary[k].best_value < primary[out.best_run].best_value)
            out.best_run = static_cast<int>(k);

    std::optional<RankSumResult> wilcoxon;
    if (needs_baseline) {
        std::vector<double> a, b;
        for (const auto& r : primary) a.push_back(r.best_value);
        for (const auto& r : baseline) b.push_back(r.best_value);
        wilcoxon = wilcoxon_rank_sum(a, b);
        out.wilcoxon_vs_baseline = wilcoxon;
    }

    out.report = build_report(cfg, tag, primary, baseline, wilcoxon);
    if (persist) write_text_file(dir / "report.json", dump_json(out.report));
    return out;
}

nlohmann::ordered_json rebuild_report(const std::string& dir_str) {
    const fs::path dir(dir_str);
    CampaignConfig cfg = campaign_from_json(load_json_file(dir / "campaign_config.json"));
    cfg.output_dir = dir_str;
    const std::string tag = config_tag(cfg);
    const bool primary_is_random = cfg.optimizer == OptimizerKind::Random;
    const bool has_baseline = cfg.optimizer == OptimizerKind::Both;

    std::vector<RunRecord> primary, baseline;
    for (int k = 0; k < cfg.repeats; ++k) {
        const fs::path run_path = dir / ("run_" + std::to_string(k) + ".json");
        if (!fs::exists(run_path))
            throw std::runtime_error("campaign incomplete, missing " + run_path.string());
        const ordered_json rj = load_json_file(run_path);
        if (rj.at("config_tag").get<std::string>() != tag)
            throw std::runtime_error("run file from a different configuration: " +
                                     run_path.string());
        const std::uint64_t run_seed =
            derive_seed(cfg.master_seed, kTagRun, static_cast<std::uint64_t>(k));
        primary.push_back(
            arm_from_json(k, run_seed, rj.at(primary_is_random ? "random" : "ncs")));
        if (has_baseline) baseline.push_back(arm_from_json(k, run_seed, rj.at("random")));
    }

    std::optional<RankSumResult> wilcoxon;
    if (has_baseline) {
        std::vector<double> a, b;
        for (const auto& r : primary) a.push_back(r.best_value);
        for (const auto& r : baseline) b.push_back(r.best_value);
        wilcoxon = wilcoxon_rank_sum(a, b);
    }
    const ordered_json report = build_report(cfg, tag, primary, baseline, wilcoxon);
    write_text_file(dir / "report.json", dump_json(report));
    return report;
}

CompareOutcome compare_objectives(const std::vector<TargetData>& targets,
                                  const CampaignConfig& base, std::uint64_t master_seed) {
    if (targets.empty()) throw std::invalid_argument("compare needs at least one target");
    CompareOutcome out;
    ordered_json rows = ordered_json::array();

    for (std::size_t i = 0; i < targets.size(); ++i) {
        const TargetData& target = targets[i];
        SimConfig sim = base.sim;
        sim.horizon = static_cast<int>(target.values.size());
        NcsConfig ncs = base.ncs;
        if (ncs.bounds.empty()) {
            const auto db = default_bounds();
            ncs.bounds.assign(db.begin(), db.end());
        }
        ncs.budget_evals = base.budget;

        const Objective ks_obj(ObjectiveKind{ObjectiveTag::KS, std::nullopt}, target.values,
                               sim, base.downsample);
        const Objective msm_obj(ObjectiveKind{ObjectiveTag::MSM, std::nullopt},
                                target.values, sim, base.downsample);

        CompareRow row;
        row.source = target.source;
        for (int arm = 0; arm < 2; ++arm) {
            const Objective& cal_obj = arm == 0 ? ks_obj : msm_obj;
            const ObjectiveFn fn = [&cal_obj](std::span<const double> x, std::uint64_t sd) {
                return cal_obj(PgpsParams::from_array(x), sd);
            };
            const std::uint64_t seed = derive_seed(
                master_seed, kTagCompare, static_cast<std::uint64_t>(i * 2 + arm));
            const CalibrationResult r = calibrate(fn, ncs, seed, base.threads);
            CompareArm& slot = arm == 0 ? row.ks_calibrated : row.msm_calibrated;
            slot.params = PgpsParams::from_array(r.best_params);
            slot.eval_seed = r.best_eval_seed;
            const MidPriceSeries regen = simulate(slot.params, sim, slot.eval_seed);
            slot.ks_value = ks_obj.score_series(regen.values);
            slot.msm_value = msm_obj.score_series(regen.values);
        }
        out.rows.push_back(row);

        ordered_json rj;
        rj["source"] = row.source;
        auto arm_json = [](const CompareArm& a) {
            ordered_json j;
            j["params"] = params_to_json(a.params);
            j["eval_seed"] = a.eval_seed;
            j["ks_value"] = a.ks_value;
            j["msm_value"] = a.msm_value;
            return j;
        };
        rj["ks_calibrated"] = arm_json(row.ks_calibrated);
        rj["msm_calibrated"] = arm_json(row.msm_calibrated);
        rj["ks_wins_under_ks"] = row.ks_calibrated.ks_value < row.msm_calibrated.ks_value;
        rows.push_back(rj);
    }

    ordered_json rep;
    rep["kind"] = "objective_comparison";
    rep["master_seed"] = master_seed;
    rep["budget"] = base.budget;
    rep["downsample"] = base.downsample;
    rep["instances"] = rows;
    bool all = true;
    for (const auto& r : out.rows)
        all = all && r.ks_calibrated.ks_value < r.msm_calibrated.ks_value;
    rep["ks_wins_under_ks_all"] = all;
    out.report = rep;

    if (!base.output_dir.empty()) {
        fs::create_directories(base.output_dir);
        write_text_file(fs::path(base.output_dir) / "compare.json", dump_json(rep));
        std::ostringstream csv;
        csv << "instance,calibrated_with,alpha,mu,delta,delta_s,lambda0,c_lambda,"
               "ks_value,msm_value\n";
        for (const auto& row : out.rows) {
            auto line = [&](const char* label, const CompareArm& a) {
                const auto arr = a.params.to_array();
                csv << row.source << ',' << label;
                for (const double v : arr) csv << ',' << format_double(v);
                csv << ',' << format_double(a.ks_value) << ',' << format_double(a.msm_value)
                    << '\n';
            };
            line("ks", row.ks_calibrated);
            line("msm", row.msm_calibrated);
        }
        write_text_file(fs::path(base.output_dir) / "compare.csv", csv.str());
    }
    return out;
}

}  // namespace fmcal
