#include "vprobe/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "vprobe/analysis.hpp"
#include "vprobe/error.hpp"
#include "vprobe/jsonl.hpp"
#include "vprobe/manifest.hpp"
#include "vprobe/png_io.hpp"
#include "vprobe/rate_limiter.hpp"
#include "vprobe/replay.hpp"
#include "vprobe/report.hpp"

namespace vprobe {

namespace fs = std::filesystem;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kValidation:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kTooFewRecords:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// stops the remaining work and is rethrown on the caller's thread.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string bytes_to_string(const std::vector<std::uint8_t>& bytes) {
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

int cmd_generate(const GenerateOptions& opts, std::ostream& log) {
  const ExperimentSpec spec = load_spec(opts.spec, opts.overrides);
  std::vector<TrialRecord> trials;
  std::map<std::string, std::size_t> seen;
  for (const auto& suite : spec.suites) {
    for (auto& t : build_suite(suite)) {
      if (!seen.emplace(t.trial_id, trials.size()).second) {
        throw Error(ErrorCode::kValidation, "duplicate trial id " + t.trial_id + " (two suites generate the same trial)");
      }
      trials.push_back(std::move(t));
    }
  }

  ensure_dir(opts.out);
  const fs::path manifest_path = opts.out / "manifest.jsonl";
  std::map<std::string, TrialRecord> previous;
  if (opts.resume && fs::exists(manifest_path)) {
    for (auto& t : read_manifest(manifest_path)) previous.emplace(t.trial_id, std::move(t));
  }

  std::set<fs::path> dirs;
  for (const auto& t : trials) dirs.insert((opts.out / t.image).parent_path());
  for (const auto& d : dirs) ensure_dir(d);

  std::atomic<std::size_t> rendered{0};
  parallel_for(trials.size(), spec.parallelism, [&](std::size_t i) {
    const TrialRecord& t = trials[i];
    const fs::path image_path = opts.out / t.image;
    const auto prev = previous.find(t.trial_id);
    if (prev != previous.end() && prev->second == t && fs::exists(image_path)) return;
    const ModelProfile& profile = find_profile(t.profile, spec.extra_profiles);
    atomic_write(image_path, bytes_to_string(encode_png(render_trial(t, profile))));
    ++rendered;
  });
  write_manifest(manifest_path, trials);
  log << "generated " << trials.size() << " trials (" << rendered.load() << " images rendered) in "
      << opts.out.string() << "\n";
  return kExitOk;
}

int cmd_run(const RunOptions& opts, std::ostream& log) {
  if (opts.parallelism < 1) throw Error(ErrorCode::kValidation, "parallelism must be >= 1");
  if (opts.rate_limit < 0.0) throw Error(ErrorCode::kValidation, "rate limit must be >= 0");
  const std::vector<TrialRecord> trials = read_manifest(opts.manifest);
  const fs::path base = opts.manifest.parent_path();

  std::map<std::string, RunResult> done;
  if (opts.resume && fs::exists(opts.out)) done = load_run_results(opts.out);

  ModelEndpointConfig endpoint = opts.endpoint;
  endpoint.parallelism = opts.parallelism;
  if (opts.backend == "http") endpoint.validate();
  auto limiter = opts.rate_limit > 0.0 ? std::make_shared<RateLimiter>(opts.rate_limit) : nullptr;
  std::shared_ptr<ReplayLog> replay;
  if (opts.replay_log) replay = std::make_shared<ReplayLog>(*opts.replay_log, !opts.resume);
  const auto backend = make_backend(opts.backend, endpoint, limiter, replay);

  std::vector<const TrialRecord*> todo;
  for (const auto& t : trials) {
    const auto it = done.find(t.trial_id);
    if (it == done.end() || it->second.error) todo.push_back(&t);
  }
  if (!opts.out.parent_path().empty()) ensure_dir(opts.out.parent_path());
  JsonlAppender sink(opts.out, !opts.resume);

  std::atomic<int> errors{0};
  std::mutex log_mutex;
  parallel_for(todo.size(), opts.parallelism, [&](std::size_t i) {
    const TrialRecord& t = *todo[i];
    Query q;
    q.prompt = t.prompt;
    q.trial = &t;
    Reply reply;
    try {
      q.png = read_bytes(base / t.image);
      reply = backend->ask(q);
    } catch (const Error& e) {
      reply.backend_id = backend->id();
      reply.error = QueryError{QueryErrorKind::kInvalidInput, 0, e.what()};
    }
    if (reply.error) {
      ++errors;
      std::lock_guard lock(log_mutex);
      log << t.trial_id << ": " << to_string(reply.error->kind) << ": " << reply.error->message << "\n";
    }
    sink.append(run_result_to_json(t.trial_id, reply));
  });

  log << "ran " << todo.size() << " trials (" << trials.size() - todo.size() << " already answered), "
      << errors.load() << " errors\n";
  return errors.load() > 0 ? kExitPartial : kExitOk;
}

int cmd_score(const ScoreOptions& opts, std::ostream& log) {
  const auto trials = read_manifest(opts.manifest);
  const auto results = load_run_results(opts.results);
  const ScoreOutcome outcome = score_run(trials, results);
  std::string body;
  for (const auto& s : outcome.scored) body += to_json(s).dump() + "\n";
  if (!opts.out.parent_path().empty()) ensure_dir(opts.out.parent_path());
  atomic_write(opts.out, body);

  for (const auto& id : outcome.missing_results) log << "no result for trial " << id << "\n";
  for (const auto& id : outcome.orphan_results) log << "result for unknown trial " << id << "\n";
  const auto errored = std::count_if(outcome.scored.begin(), outcome.scored.end(),
                                     [](const ScoredRecord& s) { return s.error.has_value(); });
  log << "scored " << outcome.scored.size() << " trials, " << errored << " errored, "
      << outcome.missing_results.size() << " missing, " << outcome.orphan_results.size() << " unmatched results\n";
  const bool unmatched = !outcome.missing_results.empty() || !outcome.orphan_results.empty();
  return unmatched ? kExitPartial : kExitOk;
}

namespace {

const char* curve_axis_label(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::kQuality: return "sampling rate";
    case SuiteKind::kSize: return "scale";
    case SuiteKind::kDistractor: return "distractors";
    case SuiteKind::kLocation: return "cell";
    case SuiteKind::kBoundaryCut: return "range ratio";
  }
  return "";
}

}  // namespace

int cmd_report(const ReportOptions& opts, std::ostream& log) {
  std::vector<ScoredRecord> records;
  for (const auto& j : read_jsonl(opts.scored)) records.push_back(scored_from_json(j));
  ensure_dir(opts.out_dir);

  std::map<std::pair<SuiteKind, std::string>, std::vector<ScoredRecord>> groups;
  for (auto& r : records) {
    if (opts.suite && r.suite != *opts.suite) continue;
    groups[{r.suite, r.profile}].push_back(std::move(r));
  }
  int files = 0;
  const auto emit = [&](const std::string& name, const std::string& content) {
    atomic_write(opts.out_dir / name, content);
    ++files;
  };
  for (const auto& [key, recs] : groups) {
    const auto& [kind, profile] = key;
    const std::string stem = std::string(to_string(kind)) + "_" + profile;
    switch (kind) {
      case SuiteKind::kQuality:
      case SuiteKind::kSize:
      case SuiteKind::kDistractor: {
        const auto points = aggregate_curve(recs, default_curve_key);
        emit(stem + "_curve.csv", curve_csv(points));
        emit(stem + "_curve.svg", curve_svg(points, stem, curve_axis_label(kind)));
        break;
      }
      case SuiteKind::kLocation: {
        std::set<int> variants;
        for (const auto& r : recs) variants.insert(r.params.at("distractors").get<int>());
        for (int k : variants) {
          const auto cells = aggregate_heatmap(recs, k);
          const std::string name = stem + "_k" + std::to_string(k);
          emit(name + "_heatmap.csv", heatmap_csv(cells));
          emit(name + "_heatmap.svg", heatmap_svg(cells, name));
        }
        break;
      }
      case SuiteKind::kBoundaryCut: {
        const auto reports = boundary_cut_report(recs, opts.bin_width);
        emit(stem + "_bins.csv", boundary_csv(reports));
        emit(stem + "_summary.csv", boundary_summary_csv(reports));
        std::vector<CurvePoint> points;
        for (const auto& rep : reports) {
          for (const auto& b : rep.full) {
            CurvePoint p;
            p.series = to_string(rep.axis);
            p.param = (b.index + 0.5) * rep.bin_width;
            p.mean_gpm = b.mean_gpm;
            p.ci_low = p.ci_high = b.mean_gpm;
            p.n = b.n;
            points.push_back(p);
          }
        }
        emit(stem + "_bins.svg", curve_svg(points, stem, curve_axis_label(kind)));
        break;
      }
    }
  }
  log << "wrote " << files << " report files to " << opts.out_dir.string() << "\n";
  return kExitOk;
}

int cmd_slice(const SliceOptions& opts, std::ostream& log) {
  const auto records = read_annotations(opts.annotations);
  if (opts.mode) {
    for (const auto& r : records) {
      if (r.mode != *opts.mode) {
        throw Error(ErrorCode::kValidation, "question " + r.question_id + " is " + to_string(r.mode) +
                                                ", expected " + to_string(*opts.mode));
      }
    }
  }
  const auto buckets = quantile_slice(records, opts.key, opts.q);
  if (!opts.out.parent_path().empty()) ensure_dir(opts.out.parent_path());
  atomic_write(opts.out, quantile_csv(buckets));
  log << "sliced " << records.size() << " questions into " << buckets.size() << " buckets by "
      << to_string(opts.key) << "\n";
  return kExitOk;
}

int cmd_convert(const ConvertOptions& opts, std::ostream& log) {
  const auto parse = [](const fs::path& p) {
    try {
      return nlohmann::json::parse(read_text_file(p));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kValidation, p.string() + ": " + e.what());
    }
  };
  const nlohmann::json questions = parse(opts.questions);
  const nlohmann::json boxes = parse(opts.boxes);
  const nlohmann::json predictions = opts.predictions ? parse(*opts.predictions) : nlohmann::json();
  const ConvertResult result = opts.mode == DatasetMode::kGqa ? convert_gqa(questions, boxes, predictions)
                                                              : convert_textvqa(questions, boxes, predictions);
  std::string body;
  for (const auto& r : result.records) body += to_json(r).dump() + "\n";
  if (!opts.out.parent_path().empty()) ensure_dir(opts.out.parent_path());
  atomic_write(opts.out, body);
  log << "converted " << result.records.size() << " questions, skipped " << result.skipped << "\n";
  return kExitOk;
}

}  // namespace vprobe
