#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fmcal/ncs.hpp"
#include "fmcal/objectives.hpp"
#include "fmcal/pgps.hpp"
#include "fmcal/stats.hpp"

namespace fmcal {

// A calibration target: the series plus provenance when it is synthetic.
struct TargetData {
    std::vector<double> values;
    std::string source;  // file path or a generated-instance label
    std::optional<PgpsParams> true_params;
    std::optional<std::uint64_t> gen_seed;
};

enum class OptimizerKind { Ncs, Random, Both };

struct CampaignConfig {
    ObjectiveTag objective = ObjectiveTag::KS;
    OptimizerKind optimizer = OptimizerKind::Ncs;
    int repeats = 10;
    std::int64_t budget = 10000;
    int downsample = 1;
    SimConfig sim;            // horizon is overridden by the target length
    NcsConfig ncs;            // bounds default to default_bounds() when empty
    TargetData target;
    std::string output_dir;   // empty: keep everything in memory
    std::uint64_t master_seed = 1;
    int threads = 1;
};

struct CampaignOutcome {
    std::vector<CalibrationResult> runs;           // primary optimizer arm
    std::vector<CalibrationResult> baseline_runs;  // random arm when optimizer == Both
    int best_run = -1;
    std::optional<RankSumResult> wilcoxon_vs_baseline;
    nlohmann::ordered_json report;
};

// Draws `count` parameter vectors uniformly inside `bounds` and simulates
// each one. Instance k uses seeds derived from (seed, k).
std::vector<TargetData> gen_synthetic_targets(
    int count, const std::vector<std::pair<double, double>>& bounds, const SimConfig& sim,
    std::uint64_t seed);

// Writes target_<k>.csv plus a target_<k>.json sidecar with the generating
// parameters into out_dir.
void write_targets(const std::vector<TargetData>& targets, const SimConfig& sim,
                   std::uint64_t seed, const std::string& out_dir);

// Repeated calibration against one target. Per-run seeds derive from the
// master seed and the run index; when optimizer == Both the random baseline
// reuses each run's seed so evaluation noise is paired. With an output
// directory set, run_<k>.json / trace_<k>.csv are written as runs finish and
// existing run files with a matching config tag are reused instead of being
// recomputed. report.json and best_series.csv land there as well.
CampaignOutcome run_calibration_campaign(const CampaignConfig& cfg);

// Rebuilds report.json for a finished campaign directory from
// campaign_config.json and the run_<k>.json files.
nlohmann::ordered_json rebuild_report(const std::string& dir);

struct CompareArm {
    PgpsParams params;
    std::uint64_t eval_seed = 0;
    double ks_value = 0.0;   // indicator values of the regenerated best series
    double msm_value = 0.0;
};

struct CompareRow {
    std::string source;
    CompareArm ks_calibrated;
    CompareArm msm_calibrated;
};

struct CompareOutcome {
    std::vector<CompareRow> rows;
    nlohmann::ordered_json report;
};

// Calibrates each instance once per objective with a shared budget and
// cross-scores both winners under both indicators. Writes compare.json and
// compare.csv into out_dir when set.
CompareOutcome compare_objectives(const std::vector<TargetData>& targets,
                                  const CampaignConfig& base, std::uint64_t master_seed);

// JSON echo/serialization helpers shared by the CLI and tests.
nlohmann::ordered_json params_to_json(const PgpsParams& p);
PgpsParams params_from_json(const nlohmann::json& j);
nlohmann::ordered_json moments_to_json(const MomentVector& m);  // reports excess kurtosis

// Reads a target_<k>.json (or compatible) sidecar.
struct TargetSidecar {
    PgpsParams params;
    std::uint64_t seed = 0;
    SimConfig sim;
};
TargetSidecar read_target_sidecar(const std::string& path);

}  // namespace fmcal
