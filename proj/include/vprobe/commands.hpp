#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "vprobe/adapters.hpp"
#include "vprobe/annotations.hpp"
#include "vprobe/error.hpp"
#include "vprobe/spec_file.hpp"

namespace vprobe {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitPartial = 3 };

int exit_code_for(const Error& e);

struct GenerateOptions {
  std::filesystem::path spec;
  std::filesystem::path out;
  SpecOverrides overrides;
  bool resume = false;  // keep images whose manifest entry is unchanged
};

// Writes <out>/manifest.jsonl and <out>/images/<suite>/<trial_id>.png.
int cmd_generate(const GenerateOptions& opts, std::ostream& log);

struct RunOptions {
  std::filesystem::path manifest;
  std::string backend = "oracle";
  ModelEndpointConfig endpoint;
  std::filesystem::path out;  // results JSONL
  std::optional<std::filesystem::path> replay_log;
  int parallelism = 1;
  double rate_limit = 0.0;  // requests per second, 0 = unlimited
  bool resume = false;
};

// Appends one result line per trial. With resume, trials that already have a
// successful result are skipped. Exit 3 when any trial ends in error.
int cmd_run(const RunOptions& opts, std::ostream& log);

struct ScoreOptions {
  std::filesystem::path manifest;
  std::filesystem::path results;  // results JSONL or replay log
  std::filesystem::path out;      // scored JSONL
};

// Exit 3 when trials and results do not pair up one to one.
int cmd_score(const ScoreOptions& opts, std::ostream& log);

struct ReportOptions {
  std::filesystem::path scored;
  std::filesystem::path out_dir;
  std::optional<SuiteKind> suite;
  double bin_width = 0.01;
};

int cmd_report(const ReportOptions& opts, std::ostream& log);

struct SliceOptions {
  std::filesystem::path annotations;
  std::optional<DatasetMode> mode;
  SliceKey key = SliceKey::kRelativeSize;
  int q = 5;
  std::filesystem::path out;  // CSV
};

int cmd_slice(const SliceOptions& opts, std::ostream& log);

struct ConvertOptions {
  DatasetMode mode = DatasetMode::kGqa;
  std::filesystem::path questions;
  std::filesystem::path boxes;  // GQA scene graphs or TextVQA OCR file
  std::optional<std::filesystem::path> predictions;
  std::filesystem::path out;  // annotation JSONL
};

int cmd_convert(const ConvertOptions& opts, std::ostream& log);

}  // namespace vprobe
