#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vprobe/adapters.hpp"
#include "vprobe/metrics.hpp"
#include "vprobe/patchgeom.hpp"
#include "vprobe/probeforge.hpp"

namespace vprobe {

// One line of a run-results file.
struct RunResult {
  std::string trial_id;
  std::string backend_id;
  std::string reply;
  int attempts = 0;
  double latency_ms = 0.0;
  std::optional<std::string> error;  // "<Kind>: message"
};

nlohmann::json run_result_to_json(const std::string& trial_id, const Reply& reply);
RunResult run_result_from_json(const nlohmann::json& j);

// Reads run results keyed by trial_id. Also accepts replay-log lines (those
// carrying a raw "response" body), so a recorded replay can be re-scored
// offline. Later lines override earlier ones for the same trial.
std::map<std::string, RunResult> load_run_results(const std::filesystem::path& path);

struct ScoredRecord {
  std::string trial_id;
  SuiteKind suite = SuiteKind::kQuality;
  std::string profile;
  nlohmann::json params;
  std::string ground_truth;
  std::string backend_id;
  std::string reply;
  std::optional<std::string> error;
  MatchResult match;

  // GPM used for aggregation: errors count as 0.
  double effective_gpm() const { return error ? 0.0 : match.gpm; }
};

nlohmann::json to_json(const ScoredRecord& record);
ScoredRecord scored_from_json(const nlohmann::json& j);

struct ScoreOutcome {
  std::vector<ScoredRecord> scored;          // sorted by trial_id
  std::vector<std::string> missing_results;  // trials without a result
  std::vector<std::string> orphan_results;   // results without a trial
};

ScoreOutcome score_run(const std::vector<TrialRecord>& trials, const std::map<std::string, RunResult>& results);

struct CurvePoint {
  std::string series;
  double param = 0.0;
  double mean_gpm = 0.0;
  int n = 0;
  int n_errors = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double inclusion_acc = 0.0;
  double exact_acc = 0.0;
};

inline constexpr int kBootstrapResamples = 1000;
inline constexpr std::uint64_t kBootstrapSeed = 0x5eedb007ULL;

// Percentile bootstrap (2.5 / 97.5) of the mean. `values` must already be in a
// canonical order for the result to be order independent.
std::pair<double, double> bootstrap_ci(const std::vector<double>& values, std::uint64_t seed,
                                       int resamples = kBootstrapResamples);

struct CurveKey {
  std::string series;
  double param = 0.0;
};
using CurveKeyFn = std::function<CurveKey(const ScoredRecord&)>;

// Mean GPM per (series, param) with a seeded bootstrap CI. Records are sorted
// by trial_id inside each cell, so input order does not matter.
std::vector<CurvePoint> aggregate_curve(const std::vector<ScoredRecord>& records, const CurveKeyFn& key,
                                        std::uint64_t seed = kBootstrapSeed);

// Default grouping for the sweep suites: quality -> sampling_rate per digit
// tier, size -> scale per tier, distractor -> count per font size.
CurveKey default_curve_key(const ScoredRecord& record);

struct HeatmapCell {
  int row = 0;
  int col = 0;
  double mean_gpm = 0.0;
  int n = 0;
  int n_errors = 0;
};

// Full rows x cols grid for location-suite records with the given distractor
// variant; cells with no records report n = 0.
std::vector<HeatmapCell> aggregate_heatmap(const std::vector<ScoredRecord>& records, int distractors);

struct BoundaryBin {
  int index = 0;       // bin [index*width, (index+1)*width)
  double mean_gpm = 0.0;
  int n = 0;
  double cut_fraction = 0.0;
};

struct BoundarySummary {
  double cut_mean = 0.0;
  int n_cut = 0;
  double uncut_mean = 0.0;
  int n_uncut = 0;
};

struct BoundaryReport {
  Axis axis = Axis::kVertical;
  double bin_width = 0.01;
  std::vector<BoundaryBin> full;
  std::vector<BoundaryBin> window;  // range_ratio in [0.25, 0.75]
  BoundarySummary summary;
  BoundarySummary window_summary;
};

std::vector<BoundaryReport> boundary_cut_report(const std::vector<ScoredRecord>& records, double bin_width = 0.01);

}  // namespace vprobe
