// fmcal: calibration toolkit for the provider/taker limit order book market
// model. Subcommands generate targets, run single simulations, calibrate,
// scan objective landscapes, compare objectives, and rebuild reports.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fmcal/harness.hpp"
#include "fmcal/landscape.hpp"
#include "fmcal/ncs.hpp"
#include "fmcal/objectives.hpp"
#include "fmcal/pgps.hpp"
#include "fmcal/series_io.hpp"
#include "fmcal/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

int default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<double> parse_number_list(const std::string& text, std::size_t expect,
                                      const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (expect != 0 && out.size() != expect)
        throw std::invalid_argument(std::string(what) + ": expected " +
                                    std::to_string(expect) + " comma-separated values");
    return out;
}

std::pair<double, double> parse_range(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument(std::string(what) + ": expected lo:hi");
    try {
        const double lo = std::stod(text.substr(0, colon));
        const double hi = std::stod(text.substr(colon + 1));
        if (!(lo < hi)) throw std::invalid_argument("lo >= hi");
        return {lo, hi};
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(what) + ": cannot parse '" + text + "'");
    }
}

std::vector<std::pair<double, double>> parse_bounds(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_range(item, "--bounds"));
    if (out.size() != fmcal::PgpsParams::kDim)
        throw std::invalid_argument("--bounds: expected 6 lo:hi entries");
    return out;
}

int param_index(const std::string& name) {
    const auto& names = fmcal::param_names();
    for (int d = 0; d < fmcal::PgpsParams::kDim; ++d)
        if (names[d] == name) return d;
    throw std::invalid_argument("unknown parameter name: " + name);
}

void add_sim_options(CLI::App* cmd, fmcal::SimConfig& sim, bool with_horizon) {
    cmd->add_option("--agents", sim.n_agents, "providers and takers per type")
        ->capture_default_str();
    if (with_horizon)
        cmd->add_option("--horizon", sim.horizon, "steps to simulate")->capture_default_str();
    cmd->add_option("--initial-price", sim.initial_price, "starting price in ticks")
        ->capture_default_str();
    cmd->add_option("--msd-samples", sim.msd_samples,
                    "Monte Carlo steps for the intensity-walk dispersion")
        ->capture_default_str();
    cmd->add_option("--msd-floor", sim.msd_floor, "lower clamp for the dispersion estimate")
        ->capture_default_str();
    cmd->add_flag("--ask-offset-inward", sim.ask_offset_inward,
                  "place ask quotes inward of the best bid (marketable variant)");
    cmd->add_flag("--shuffle-agents", sim.shuffle_agents,
                  "randomize the provider/taker action order each step");
}

void add_ncs_options(CLI::App* cmd, fmcal::NcsConfig& ncs, std::string& bounds_text) {
    cmd->add_option("--processes", ncs.num_processes, "search processes")
        ->capture_default_str();
    cmd->add_option("--samples-per-process", ncs.samples_per_process,
                    "evaluations per process per iteration")
        ->capture_default_str();
    cmd->add_option("--beta-start", ncs.beta_start, "replace probability at start")
        ->capture_default_str();
    cmd->add_option("--beta-end", ncs.beta_end, "replace probability at end")
        ->capture_default_str();
    cmd->add_option("--epsilon0", ncs.epsilon0, "exploration gate reset level")
        ->capture_default_str();
    cmd->add_option("--rho", ncs.rho, "exploration gate decay")->capture_default_str();
    cmd->add_option("--sigma-epoch", ncs.sigma_epoch, "iterations per step-size adaption")
        ->capture_default_str();
    const std::map<std::string, fmcal::NcsConfig::CaseMapping> cm{
        {"standard", fmcal::NcsConfig::CaseMapping::Standard},
        {"swapped", fmcal::NcsConfig::CaseMapping::Swapped}};
    cmd->add_option("--case-mapping", ncs.case_mapping,
                    "replacement rule for the mixed selection cases")
        ->transform(CLI::CheckedTransformer(cm, CLI::ignore_case))
        ->default_str("standard");
    const std::map<std::string, fmcal::NcsConfig::DiversityMode> dv{
        {"closed_form", fmcal::NcsConfig::DiversityMode::ClosedForm},
        {"sampled", fmcal::NcsConfig::DiversityMode::Sampled}};
    cmd->add_option("--diversity", ncs.diversity, "diversity score form")
        ->transform(CLI::CheckedTransformer(dv, CLI::ignore_case))
        ->default_str("closed_form");
    const std::map<std::string, fmcal::NcsConfig::SpreadInit> sp{
        {"stddev", fmcal::NcsConfig::SpreadInit::AsStdDev},
        {"variance", fmcal::NcsConfig::SpreadInit::AsVariance}};
    cmd->add_option("--spread-init", ncs.spread_init,
                    "interpret (hi-lo)/processes as stddev or variance")
        ->transform(CLI::CheckedTransformer(sp, CLI::ignore_case))
        ->default_str("stddev");
    cmd->add_option("--bounds", bounds_text,
                    "six lo:hi pairs, comma separated, in parameter order");
}

fmcal::TargetData load_target(const std::string& path, double tick_size) {
    fmcal::TargetData t;
    t.values = fmcal::read_series_csv_file(path);
    if (tick_size > 0.0) t.values = fmcal::convert_to_ticks(t.values, tick_size);
    t.source = path;
    return t;
}

void print_campaign_summary(const fmcal::CampaignOutcome& outcome) {
    const auto& agg = outcome.report.at("aggregate");
    std::cout << "runs: " << outcome.runs.size() << "\n";
    for (const auto& run : outcome.report.at("runs"))
        std::cout << "  run " << run.at("run") << ": best "
                  << run.at("best_value").get<double>() << "\n";
    std::cout << "best value: " << agg.at("best_value").get<double>() << " (run "
              << agg.at("best_run") << ")\n"
              << "mean best:  " << agg.at("mean_best").get<double>() << "\n"
              << "median:     " << agg.at("median_best").get<double>() << "\n";
    if (agg.contains("ks_critical_value_alpha05"))
        std::cout << "ks critical value (5%): "
                  << agg.at("ks_critical_value_alpha05").get<double>() << " -> best "
                  << (agg.at("best_below_critical").get<bool>() ? "below" : "above") << "\n";
    if (agg.contains("wilcoxon_vs_baseline"))
        std::cout << "vs random baseline: U="
                  << agg.at("wilcoxon_vs_baseline").at("u").get<double>()
                  << " p=" << agg.at("wilcoxon_vs_baseline").at("p").get<double>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"calibration toolkit for an agent-based limit order book market model"};
    app.set_version_flag("--version", "fmcal 0.1.0");
    app.set_config("--config", "", "read options from an INI file");
    app.require_subcommand(0, 1);

    // ---- gen-targets ----
    auto* gen = app.add_subcommand("gen-targets", "simulate synthetic target series");
    int gen_count = 3;
    std::string gen_out;
    std::uint64_t gen_seed = 1;
    fmcal::SimConfig gen_sim;
    std::string gen_bounds_text;
    gen->add_option("--count", gen_count, "number of instances")->capture_default_str();
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "master seed")->capture_default_str();
    gen->add_option("--gen-bounds", gen_bounds_text,
                    "six lo:hi pairs for the true-parameter draw");
    add_sim_options(gen, gen_sim, true);

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand("simulate", "run the market model once");
    std::string sim_params_text, sim_params_file, sim_out;
    std::uint64_t sim_seed = 1;
    fmcal::SimConfig sim_cfg;
    sim_cmd->add_option("--params", sim_params_text,
                        "alpha,mu,delta,delta_s,lambda0,c_lambda");
    sim_cmd->add_option("--params-file", sim_params_file,
                        "JSON sidecar with params/seed/sim settings");
    sim_cmd->add_option("--out", sim_out, "output CSV path")->required();
    sim_cmd->add_option("--seed", sim_seed, "simulation seed")->capture_default_str();
    add_sim_options(sim_cmd, sim_cfg, true);

    // ---- calibrate ----
    auto* cal = app.add_subcommand("calibrate", "fit model parameters to a target series");
    std::string cal_target, cal_out, cal_bounds_text;
    std::string cal_objective = "ks", cal_optimizer = "ncs";
    int cal_repeats = 10, cal_downsample = 1;
    std::int64_t cal_budget = 10000;
    std::uint64_t cal_seed = 1;
    int cal_threads = default_threads();
    double cal_tick = 0.0;
    fmcal::SimConfig cal_sim;
    fmcal::NcsConfig cal_ncs;
    cal->add_option("--target", cal_target, "target series CSV")->required();
    cal->add_option("--out", cal_out, "output directory for runs and the report");
    cal->add_option("--objective", cal_objective, "ks or msm")
        ->check(CLI::IsMember({"ks", "msm"}));
    cal->add_option("--optimizer", cal_optimizer, "ncs, random, or both")
        ->check(CLI::IsMember({"ncs", "random", "both"}));
    cal->add_option("--repeats", cal_repeats, "independent calibration runs")
        ->capture_default_str();
    cal->add_option("--budget", cal_budget, "objective evaluations per run")
        ->capture_default_str();
    cal->add_option("--downsample", cal_downsample, "score every k-th sample")
        ->capture_default_str();
    cal->add_option("--seed", cal_seed, "master seed")->capture_default_str();
    cal->add_option("--threads", cal_threads, "worker threads (never changes results)")
        ->capture_default_str();
    cal->add_option("--tick-size", cal_tick,
                    "convert a currency-priced target into ticks of this size");
    add_sim_options(cal, cal_sim, false);
    add_ncs_options(cal, cal_ncs, cal_bounds_text);

    // ---- landscape ----
    auto* land = app.add_subcommand("landscape", "grid scan of the objective over 2 parameters");
    std::string land_target, land_truth, land_fixed_text, land_out;
    std::string land_dims = "lambda0,c_lambda";
    std::string land_objective = "ks";
    std::string land_range1_text, land_range2_text;
    int land_res = 20, land_downsample = 1, land_topk = 0;
    std::uint64_t land_seed = 1;
    int land_threads = default_threads();
    double land_tick = 0.0;
    fmcal::SimConfig land_sim;
    land->add_option("--target", land_target, "target series CSV")->required();
    land->add_option("--truth", land_truth,
                     "target sidecar JSON giving the fixed (true) parameters");
    land->add_option("--fixed", land_fixed_text,
                     "fixed parameter vector alpha,mu,delta,delta_s,lambda0,c_lambda");
    land->add_option("--dims", land_dims, "two parameter names to scan")
        ->capture_default_str();
    land->add_option("--objective", land_objective, "ks or msm")
        ->check(CLI::IsMember({"ks", "msm"}));
    land->add_option("--resolution", land_res, "grid cells per dimension")
        ->capture_default_str();
    land->add_option("--downsample", land_downsample, "score every k-th sample")
        ->capture_default_str();
    land->add_option("--top-k", land_topk, "cells to mark (default: 10% of the grid)");
    land->add_option("--range1", land_range1_text, "lo:hi for the first scanned dim");
    land->add_option("--range2", land_range2_text, "lo:hi for the second scanned dim");
    land->add_option("--seed", land_seed, "scan seed")->capture_default_str();
    land->add_option("--threads", land_threads, "worker threads")->capture_default_str();
    land->add_option("--tick-size", land_tick, "target tick conversion");
    land->add_option("--out", land_out, "output directory")->required();
    add_sim_options(land, land_sim, false);

    // ---- compare-objectives ----
    auto* cmp = app.add_subcommand("compare-objectives",
                                   "calibrate with ks and msm and cross-score the winners");
    std::vector<std::string> cmp_targets;
    std::string cmp_out, cmp_bounds_text;
    std::int64_t cmp_budget = 10000;
    int cmp_downsample = 1;
    std::uint64_t cmp_seed = 1;
    int cmp_threads = default_threads();
    double cmp_tick = 0.0;
    fmcal::SimConfig cmp_sim;
    fmcal::NcsConfig cmp_ncs;
    cmp->add_option("--targets", cmp_targets, "target series CSVs")
        ->required()
        ->delimiter(',');
    cmp->add_option("--out", cmp_out, "output directory");
    cmp->add_option("--budget", cmp_budget, "evaluations per calibration")
        ->capture_default_str();
    cmp->add_option("--downsample", cmp_downsample, "score every k-th sample")
        ->capture_default_str();
    cmp->add_option("--seed", cmp_seed, "master seed")->capture_default_str();
    cmp->add_option("--threads", cmp_threads, "worker threads")->capture_default_str();
    cmp->add_option("--tick-size", cmp_tick, "target tick conversion");
    add_sim_options(cmp, cmp_sim, false);
    add_ncs_options(cmp, cmp_ncs, cmp_bounds_text);

    // ---- report ----
    auto* rep = app.add_subcommand("report", "rebuild report.json for a campaign directory");
    std::string rep_dir;
    rep->add_option("--dir", rep_dir, "campaign output directory")->required();

    // ---- config ----
    auto* cfg_cmd = app.add_subcommand("config", "print the default configuration");
    bool cfg_defaults = false;
    cfg_cmd->add_flag("--defaults", cfg_defaults, "print an INI file with all defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // config/flag problems map to exit 1
    }

    try {
        if (app.got_subcommand(gen)) {
            auto bounds_arr = fmcal::default_bounds();
            std::vector<std::pair<double, double>> bounds(bounds_arr.begin(),
                                                          bounds_arr.end());
            if (!gen_bounds_text.empty()) bounds = parse_bounds(gen_bounds_text);
            const auto targets =
                fmcal::gen_synthetic_targets(gen_count, bounds, gen_sim, gen_seed);
            fmcal::write_targets(targets, gen_sim, gen_seed, gen_out);
            for (std::size_t k = 0; k < targets.size(); ++k)
                std::cout << (fs::path(gen_out) / ("target_" + std::to_string(k) + ".csv"))
                                 .string()
                          << "\n";
            return 0;
        }

        if (app.got_subcommand(sim_cmd)) {
            fmcal::PgpsParams params;
            if (!sim_params_file.empty()) {
                const auto sidecar = fmcal::read_target_sidecar(sim_params_file);
                params = sidecar.params;
                // explicit flags win over sidecar settings
                if (sim_cmd->count("--seed") == 0) sim_seed = sidecar.seed;
                fmcal::SimConfig merged = sidecar.sim;
                if (sim_cmd->count("--agents")) merged.n_agents = sim_cfg.n_agents;
                if (sim_cmd->count("--horizon")) merged.horizon = sim_cfg.horizon;
                if (sim_cmd->count("--initial-price"))
                    merged.initial_price = sim_cfg.initial_price;
                if (sim_cmd->count("--msd-samples")) merged.msd_samples = sim_cfg.msd_samples;
                if (sim_cmd->count("--msd-floor")) merged.msd_floor = sim_cfg.msd_floor;
                if (sim_cmd->count("--ask-offset-inward"))
                    merged.ask_offset_inward = sim_cfg.ask_offset_inward;
                if (sim_cmd->count("--shuffle-agents"))
                    merged.shuffle_agents = sim_cfg.shuffle_agents;
                sim_cfg = merged;
            } else if (!sim_params_text.empty()) {
                params = fmcal::PgpsParams::from_array(
                    parse_number_list(sim_params_text, fmcal::PgpsParams::kDim, "--params"));
            } else {
                throw std::invalid_argument("simulate needs --params or --params-file");
            }
            const auto series = fmcal::simulate(params, sim_cfg, sim_seed);
            fmcal::write_series_csv_file(series.values, sim_out);
            std::cout << sim_out << ": " << series.values.size() << " steps, last mid "
                      << fmcal::format_double(series.values.back()) << "\n";
            return 0;
        }

        if (app.got_subcommand(cal)) {
            fmcal::CampaignConfig cc;
            cc.objective =
                cal_objective == "msm" ? fmcal::ObjectiveTag::MSM : fmcal::ObjectiveTag::KS;
            cc.optimizer = cal_optimizer == "random" ? fmcal::OptimizerKind::Random
                           : cal_optimizer == "both" ? fmcal::OptimizerKind::Both
                                                     : fmcal::OptimizerKind::Ncs;
            cc.repeats = cal_repeats;
            cc.budget = cal_budget;
            cc.downsample = cal_downsample;
            cc.sim = cal_sim;
            cc.ncs = cal_ncs;
            if (!cal_bounds_text.empty()) cc.ncs.bounds = parse_bounds(cal_bounds_text);
            cc.target = load_target(cal_target, cal_tick);
            cc.output_dir = cal_out;
            cc.master_seed = cal_seed;
            cc.threads = cal_threads;
            const auto outcome = fmcal::run_calibration_campaign(cc);
            print_campaign_summary(outcome);
            if (!cal_out.empty())
                std::cout << "report: " << (fs::path(cal_out) / "report.json").string()
                          << "\n";
            return 0;
        }

        if (app.got_subcommand(land)) {
            fmcal::TargetData target = load_target(land_target, land_tick);
            fmcal::PgpsParams fixed;
            std::optional<fmcal::PgpsParams> truth;
            if (!land_truth.empty()) {
                const auto sidecar = fmcal::read_target_sidecar(land_truth);
                fixed = sidecar.params;
                truth = sidecar.params;
            } else if (!land_fixed_text.empty()) {
                fixed = fmcal::PgpsParams::from_array(
                    parse_number_list(land_fixed_text, fmcal::PgpsParams::kDim, "--fixed"));
                truth = fixed;
            } else {
                throw std::invalid_argument("landscape needs --truth or --fixed");
            }

            std::stringstream ss(land_dims);
            std::string n1, n2;
            if (!std::getline(ss, n1, ',') || !std::getline(ss, n2, ','))
                throw std::invalid_argument("--dims needs two parameter names");
            fmcal::GridSpec spec;
            spec.dim1 = param_index(n1);
            spec.dim2 = param_index(n2);
            spec.resolution = land_res;
            const auto db = fmcal::default_bounds();
            spec.range1 = land_range1_text.empty() ? db[spec.dim1]
                                                   : parse_range(land_range1_text, "--range1");
            spec.range2 = land_range2_text.empty() ? db[spec.dim2]
                                                   : parse_range(land_range2_text, "--range2");

            fmcal::SimConfig sim = land_sim;
            sim.horizon = static_cast<int>(target.values.size());
            const fmcal::ObjectiveKind kind{land_objective == "msm"
                                                ? fmcal::ObjectiveTag::MSM
                                                : fmcal::ObjectiveTag::KS,
                                            std::nullopt};
            const fmcal::Objective obj(kind, target.values, sim, land_downsample);
            const fmcal::CellObjective cell_fn =
                [&obj](const fmcal::PgpsParams& p, std::uint64_t sd) { return obj(p, sd); };

            const auto scan =
                fmcal::grid_scan(cell_fn, fixed, spec, land_seed, land_threads, truth);
            const int cells = spec.resolution * spec.resolution;
            const int k = land_topk > 0
                              ? land_topk
                              : std::max(1, static_cast<int>(std::ceil(0.10 * cells)));
            const auto mask = fmcal::top_k_mask(scan, k);

            fs::create_directories(land_out);
            std::ostringstream grid_csv;
            fmcal::write_grid_csv(scan, k, grid_csv);
            std::ofstream grid_out(fs::path(land_out) / "grid.csv", std::ios::binary);
            grid_out << grid_csv.str();
            if (!grid_out) throw std::runtime_error("write failed: grid.csv");
            grid_out.close();

            ordered_json sj;
            sj["dims"] = {n1, n2};
            sj["resolution"] = spec.resolution;
            sj["ranges"] = {{spec.range1.first, spec.range1.second},
                            {spec.range2.first, spec.range2.second}};
            sj["downsample"] = land_downsample;
            sj["seed"] = land_seed;
            sj["top_k"] = k;
            sj["objective"] = land_objective;
            sj["fixed_params"] = fmcal::params_to_json(fixed);
            if (scan.target_cell) {
                sj["target_cell"] = {scan.target_cell->first, scan.target_cell->second};
                const std::size_t flat = static_cast<std::size_t>(scan.target_cell->first) *
                                             spec.resolution +
                                         scan.target_cell->second;
                sj["target_in_mask"] = mask[flat] != 0;
            } else {
                sj["target_cell"] = nullptr;
                sj["target_in_mask"] = nullptr;
            }
            sj["tied_at_min"] = fmcal::tied_at_min_count(scan);
            double lo = scan.cells[0];
            for (const double v : scan.cells) lo = std::min(lo, v);
            sj["min_value"] = lo;
            std::ofstream sjf(fs::path(land_out) / "scan.json", std::ios::binary);
            sjf << sj.dump(2) << "\n";
            if (!sjf) throw std::runtime_error("write failed: scan.json");

            std::cout << "grid: " << (fs::path(land_out) / "grid.csv").string() << "\n"
                      << "tied at minimum: " << fmcal::tied_at_min_count(scan) << "\n";
            if (scan.target_cell)
                std::cout << "target cell (" << scan.target_cell->first << ","
                          << scan.target_cell->second << ") in top-" << k << ": "
                          << (sj["target_in_mask"].get<bool>() ? "yes" : "no") << "\n";
            return 0;
        }

        if (app.got_subcommand(cmp)) {
            std::vector<fmcal::TargetData> targets;
            for (const auto& path : cmp_targets) targets.push_back(load_target(path, cmp_tick));
            fmcal::CampaignConfig base;
            base.budget = cmp_budget;
            base.downsample = cmp_downsample;
            base.sim = cmp_sim;
            base.ncs = cmp_ncs;
            if (!cmp_bounds_text.empty()) base.ncs.bounds = parse_bounds(cmp_bounds_text);
            base.output_dir = cmp_out;
            base.threads = cmp_threads;
            const auto outcome = fmcal::compare_objectives(targets, base, cmp_seed);
            std::cout << "instance            ks-cal(ks)  ks-cal(msm)  msm-cal(ks)  "
                         "msm-cal(msm)\n";
            for (const auto& row : outcome.rows) {
                std::cout << row.source << "  " << row.ks_calibrated.ks_value << "  "
                          << row.ks_calibrated.msm_value << "  " << row.msm_calibrated.ks_value
                          << "  " << row.msm_calibrated.msm_value << "\n";
            }
            std::cout << "ks wins under ks on all instances: "
                      << (outcome.report.at("ks_wins_under_ks_all").get<bool>() ? "yes" : "no")
                      << "\n";
            return 0;
        }

        if (app.got_subcommand(rep)) {
            const auto report = fmcal::rebuild_report(rep_dir);
            std::cout << "report: " << (fs::path(rep_dir) / "report.json").string() << "\n"
                      << "best value: " << report.at("aggregate").at("best_value").get<double>()
                      << "\n";
            return 0;
        }

        if (app.got_subcommand(cfg_cmd)) {
            (void)cfg_defaults;  // the flag is accepted for symmetry; output is the same
            std::cout << app.config_to_str(true, true);
            return 0;
        }

        std::cout << app.help();
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
