#include "vprobe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "vprobe/error.hpp"
#include "vprobe/jsonl.hpp"
#include "vprobe/rng.hpp"

namespace vprobe {

nlohmann::json run_result_to_json(const std::string& trial_id, const Reply& reply) {
  nlohmann::json j = {{"trial_id", trial_id},
                      {"backend_id", reply.backend_id},
                      {"reply", reply.text},
                      {"attempts", reply.attempt_count},
                      {"latency_ms", reply.latency_ms}};
  if (reply.error) {
    j["error"] = {{"kind", to_string(reply.error->kind)},
                  {"status", reply.error->http_status},
                  {"message", reply.error->message}};
  } else {
    j["error"] = nullptr;
  }
  return j;
}

RunResult run_result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.trial_id = j.at("trial_id").get<std::string>();
  r.backend_id = j.value("backend_id", "");
  r.attempts = j.value("attempts", 0);
  r.latency_ms = j.value("latency_ms", 0.0);
  if (j.contains("response")) {
    // replay-log line: recover the reply from the raw body
    const int status = j.value("status", 0);
    const std::string body = j.at("response").get<std::string>();
    if (status == 0) {
      r.error = "Timeout: no response received";
    } else if (status != 200) {
      r.error = "HttpStatus: HTTP " + std::to_string(status);
    } else if (auto text = parse_chat_reply(body)) {
      r.reply = *text;
    } else {
      r.error = "MalformedResponse: response does not follow the chat schema";
    }
    return r;
  }
  r.reply = j.value("reply", "");
  if (j.contains("error") && !j["error"].is_null()) {
    const auto& e = j["error"];
    if (e.is_string()) {
      r.error = e.get<std::string>();
    } else {
      r.error = e.value("kind", "Error") + ": " + e.value("message", "");
    }
  }
  return r;
}

std::map<std::string, RunResult> load_run_results(const std::filesystem::path& path) {
  std::map<std::string, RunResult> out;
  int line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    try {
      RunResult r = run_result_from_json(j);
      out[r.trial_id] = std::move(r);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kValidation, path.string() + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json to_json(const ScoredRecord& r) {
  return {{"trial_id", r.trial_id},
          {"suite", to_string(r.suite)},
          {"profile", r.profile},
          {"params", r.params},
          {"ground_truth", r.ground_truth},
          {"backend_id", r.backend_id},
          {"reply", r.reply},
          {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)},
          {"gpm", r.match.gpm},
          {"exact", r.match.exact},
          {"inclusion", r.match.inclusion},
          {"normalized_prediction", r.match.normalized_prediction},
          {"extracted_answer", r.match.extracted_answer}};
}

ScoredRecord scored_from_json(const nlohmann::json& j) {
  try {
    ScoredRecord r;
    r.trial_id = j.at("trial_id").get<std::string>();
    r.suite = suite_kind_from_string(j.at("suite").get<std::string>());
    r.profile = j.at("profile").get<std::string>();
    r.params = j.at("params");
    r.ground_truth = j.at("ground_truth").get<std::string>();
    r.backend_id = j.value("backend_id", "");
    r.reply = j.value("reply", "");
    if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
    r.match.gpm = j.at("gpm").get<double>();
    r.match.exact = j.at("exact").get<int>();
    r.match.inclusion = j.at("inclusion").get<int>();
    r.match.normalized_prediction = j.value("normalized_prediction", "");
    r.match.extracted_answer = j.value("extracted_answer", "");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed scored record: ") + e.what());
  }
}

ScoreOutcome score_run(const std::vector<TrialRecord>& trials, const std::map<std::string, RunResult>& results) {
  ScoreOutcome out;
  std::map<std::string, const TrialRecord*> by_id;
  for (const auto& t : trials) by_id[t.trial_id] = &t;

  for (const auto& [id, trial] : by_id) {
    const auto it = results.find(id);
    if (it == results.end()) {
      out.missing_results.push_back(id);
      continue;
    }
    const RunResult& res = it->second;
    ScoredRecord s;
    s.trial_id = id;
    s.suite = trial->suite;
    s.profile = trial->profile;
    s.params = trial->params;
    s.ground_truth = trial->ground_truth;
    s.backend_id = res.backend_id;
    s.reply = res.reply;
    s.error = res.error;
    if (s.error) {
      s.match.normalized_prediction = "";
      s.match.extracted_answer = "";
    } else {
      s.match = score_reply(res.reply, trial->ground_truth);
    }
    out.scored.push_back(std::move(s));
  }
  for (const auto& [id, res] : results) {
    if (!by_id.count(id)) out.orphan_results.push_back(id);
  }
  return out;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& values, std::uint64_t seed, int resamples) {
  if (values.empty()) return {0.0, 0.0};
  if (resamples < 1) throw Error(ErrorCode::kInvalidArgument, "resamples must be >= 1");
  CounterRng rng(seed);
  const std::uint64_t n = values.size();
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double sum = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) sum += values[rng.uniform(0, n - 1)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const auto pick = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::floor(p * static_cast<double>(resamples - 1) + 0.5));
    return means[std::min(idx, means.size() - 1)];
  };
  return {pick(0.025), pick(0.975)};
}

namespace {

std::string fmt_key(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::vector<CurvePoint> aggregate_curve(const std::vector<ScoredRecord>& records, const CurveKeyFn& key,
                                        std::uint64_t seed) {
  std::map<std::pair<std::string, double>, std::vector<const ScoredRecord*>> cells;
  for (const auto& r : records) {
    const CurveKey k = key(r);
    cells[{k.series, k.param}].push_back(&r);
  }
  std::vector<CurvePoint> out;
  for (auto& [k, members] : cells) {
    std::sort(members.begin(), members.end(),
              [](const ScoredRecord* a, const ScoredRecord* b) { return a->trial_id < b->trial_id; });
    CurvePoint p;
    p.series = k.first;
    p.param = k.second;
    p.n = static_cast<int>(members.size());
    std::vector<double> values;
    values.reserve(members.size());
    double inclusion = 0.0;
    double exact = 0.0;
    for (const auto* r : members) {
      values.push_back(r->effective_gpm());
      if (r->error) {
        ++p.n_errors;
      } else {
        inclusion += r->match.inclusion;
        exact += r->match.exact;
      }
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    p.mean_gpm = sum / static_cast<double>(p.n);
    p.inclusion_acc = inclusion / static_cast<double>(p.n);
    p.exact_acc = exact / static_cast<double>(p.n);
    std::tie(p.ci_low, p.ci_high) = bootstrap_ci(values, derive_seed(seed, {k.first, fmt_key(k.second)}));
    out.push_back(std::move(p));
  }
  return out;
}

CurveKey default_curve_key(const ScoredRecord& r) {
  const auto& p = r.params;
  switch (r.suite) {
    case SuiteKind::kQuality:
      return {r.profile + "/digits=" + std::to_string(p.at("digits").get<int>()), p.at("sampling_rate").get<double>()};
    case SuiteKind::kSize:
      return {r.profile + "/digits=" + std::to_string(p.at("digits").get<int>()), p.at("scale").get<double>()};
    case SuiteKind::kDistractor:
      return {r.profile + "/font=" + std::to_string(p.at("font").get<int>()), p.at("distractors").get<double>()};
    case SuiteKind::kLocation:
      return {r.profile + "/distractors=" + std::to_string(p.at("distractors").get<int>()),
              static_cast<double>(p.at("row").get<int>() * p.at("cols").get<int>() + p.at("col").get<int>())};
    case SuiteKind::kBoundaryCut:
      return {r.profile + "/" + p.at("axis").get<std::string>(), p.at("range_ratio").get<double>()};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown suite");
}

std::vector<HeatmapCell> aggregate_heatmap(const std::vector<ScoredRecord>& records, int distractors) {
  int rows = 0;
  int cols = 0;
  std::vector<const ScoredRecord*> selected;
  for (const auto& r : records) {
    if (r.suite != SuiteKind::kLocation || r.params.at("distractors").get<int>() != distractors) continue;
    rows = std::max(rows, r.params.at("rows").get<int>());
    cols = std::max(cols, r.params.at("cols").get<int>());
    selected.push_back(&r);
  }
  std::sort(selected.begin(), selected.end(),
            [](const ScoredRecord* a, const ScoredRecord* b) { return a->trial_id < b->trial_id; });
  std::vector<HeatmapCell> grid(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  std::vector<double> sums(grid.size(), 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      grid[static_cast<std::size_t>(r * cols + c)].row = r;
      grid[static_cast<std::size_t>(r * cols + c)].col = c;
    }
  }
  for (const auto* rec : selected) {
    const int r = rec->params.at("row").get<int>();
    const int c = rec->params.at("col").get<int>();
    if (r < 0 || c < 0 || r >= rows || c >= cols) {
      throw Error(ErrorCode::kValidation, "location record outside its grid: " + rec->trial_id);
    }
    auto& cell = grid[static_cast<std::size_t>(r * cols + c)];
    ++cell.n;
    if (rec->error) ++cell.n_errors;
    sums[static_cast<std::size_t>(r * cols + c)] += rec->effective_gpm();
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].n > 0) grid[i].mean_gpm = sums[i] / grid[i].n;
  }
  return grid;
}

namespace {

struct BinAccumulator {
  double sum = 0.0;
  int n = 0;
  int cut = 0;
};

std::vector<BoundaryBin> finish_bins(const std::map<int, BinAccumulator>& bins) {
  std::vector<BoundaryBin> out;
  for (const auto& [index, acc] : bins) {
    out.push_back({index, acc.sum / acc.n, acc.n, static_cast<double>(acc.cut) / acc.n});
  }
  return out;
}

BoundarySummary summarize(const std::vector<const ScoredRecord*>& recs) {
  BoundarySummary s;
  double cut_sum = 0.0;
  double uncut_sum = 0.0;
  for (const auto* r : recs) {
    if (r->params.at("is_cut").get<bool>()) {
      cut_sum += r->effective_gpm();
      ++s.n_cut;
    } else {
      uncut_sum += r->effective_gpm();
      ++s.n_uncut;
    }
  }
  if (s.n_cut > 0) s.cut_mean = cut_sum / s.n_cut;
  if (s.n_uncut > 0) s.uncut_mean = uncut_sum / s.n_uncut;
  return s;
}

}  // namespace

std::vector<BoundaryReport> boundary_cut_report(const std::vector<ScoredRecord>& records, double bin_width) {
  if (!(bin_width > 0.0) || bin_width > 1.0) throw Error(ErrorCode::kInvalidArgument, "bin width must be in (0, 1]");
  const int n_bins = static_cast<int>(std::lround(1.0 / bin_width));
  std::map<std::string, std::vector<const ScoredRecord*>> by_axis;
  for (const auto& r : records) {
    if (r.suite == SuiteKind::kBoundaryCut) by_axis[r.params.at("axis").get<std::string>()].push_back(&r);
  }
  std::vector<BoundaryReport> out;
  for (auto& [axis_name, recs] : by_axis) {
    std::sort(recs.begin(), recs.end(),
              [](const ScoredRecord* a, const ScoredRecord* b) { return a->trial_id < b->trial_id; });
    BoundaryReport report;
    report.axis = axis_from_string(axis_name);
    report.bin_width = bin_width;
    std::map<int, BinAccumulator> full;
    std::map<int, BinAccumulator> window;
    std::vector<const ScoredRecord*> window_recs;
    for (const auto* r : recs) {
      const double ratio = r->params.at("range_ratio").get<double>();
      const int bin = std::clamp(static_cast<int>(std::floor(ratio / bin_width + 1e-9)), 0, n_bins - 1);
      const bool cut = r->params.at("is_cut").get<bool>();
      auto add = [&](std::map<int, BinAccumulator>& bins) {
        auto& acc = bins[bin];
        acc.sum += r->effective_gpm();
        ++acc.n;
        acc.cut += cut ? 1 : 0;
      };
      add(full);
      if (ratio >= 0.25 && ratio <= 0.75) {
        add(window);
        window_recs.push_back(r);
      }
    }
    report.full = finish_bins(full);
    report.window = finish_bins(window);
    report.summary = summarize(recs);
    report.window_summary = summarize(window_recs);
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace vprobe
