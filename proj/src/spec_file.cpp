#include "vprobe/spec_file.hpp"

#include <cctype>
#include <iterator>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "vprobe/error.hpp"
#include "vprobe/jsonl.hpp"

namespace vprobe {
namespace {

using nlohmann::json;

// Forward iterator over the text that remembers the line of the last
// non-blank character consumed. The lexer may read one character past a
// number, so the last non-blank character is the reliable anchor.
struct LineState {
  int line = 1;
  int last_line = 1;
};

class CountingIterator {
 public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  CountingIterator() = default;
  CountingIterator(const char* p, LineState* state) : p_(p), state_(state) {}

  reference operator*() const { return *p_; }
  CountingIterator& operator++() {
    if (*p_ == '\n') {
      ++state_->line;
    } else if (!std::isspace(static_cast<unsigned char>(*p_))) {
      state_->last_line = state_->line;
    }
    ++p_;
    return *this;
  }
  CountingIterator operator++(int) {
    CountingIterator copy = *this;
    ++*this;
    return copy;
  }
  bool operator==(const CountingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const CountingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_ = nullptr;
  LineState* state_ = nullptr;
};

std::string escape_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

// Builds the DOM while recording the line of every JSON pointer.
class LineMappingSax {
 public:
  LineMappingSax(json& root, const LineState& state, std::map<std::string, int>& lines)
      : dom_(root), state_(state), lines_(lines) {}

  bool null() { return value(), dom_.null(); }
  bool boolean(bool v) { return value(), dom_.boolean(v); }
  bool number_integer(json::number_integer_t v) { return value(), dom_.number_integer(v); }
  bool number_unsigned(json::number_unsigned_t v) { return value(), dom_.number_unsigned(v); }
  bool number_float(json::number_float_t v, const std::string& s) { return value(), dom_.number_float(v, s); }
  bool string(std::string& v) { return value(), dom_.string(v); }
  bool binary(json::binary_t& v) { return value(), dom_.binary(v); }

  bool start_object(std::size_t n) {
    frames_.push_back({value(), false, 0, {}});
    return dom_.start_object(n);
  }
  bool key(std::string& k) {
    frames_.back().key_path = frames_.back().path + "/" + escape_token(k);
    lines_[frames_.back().key_path] = state_.last_line;
    return dom_.key(k);
  }
  bool end_object() {
    frames_.pop_back();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) {
    frames_.push_back({value(), true, 0, {}});
    return dom_.start_array(n);
  }
  bool end_array() {
    frames_.pop_back();
    return dom_.end_array();
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) {
    error_line = state_.line;
    error_message = ex.what();
    return false;
  }

  int error_line = 0;
  std::string error_message;

 private:
  struct Frame {
    std::string path;
    bool is_array;
    std::size_t index;
    std::string key_path;
  };

  // Pointer of the value about to be produced.
  std::string value() {
    if (frames_.empty()) {
      lines_[""] = state_.last_line;
      return "";
    }
    Frame& f = frames_.back();
    if (!f.is_array) return f.key_path;
    std::string p = f.path + "/" + std::to_string(f.index++);
    lines_[p] = state_.last_line;
    return p;
  }

  nlohmann::detail::json_sax_dom_parser<json> dom_;
  const LineState& state_;
  std::map<std::string, int>& lines_;
  std::vector<Frame> frames_;
};

class Doc {
 public:
  Doc(std::string source, std::map<std::string, int> lines) : source_(std::move(source)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& reason) const {
    // fall back to the nearest ancestor that has a line
    std::string p = pointer;
    int line = 1;
    while (true) {
      const auto it = lines_.find(p);
      if (it != lines_.end()) {
        line = it->second;
        break;
      }
      const auto slash = p.rfind('/');
      if (slash == std::string::npos) break;
      p = p.substr(0, slash);
    }
    throw Error(ErrorCode::kValidation,
                source_ + ":" + std::to_string(line) + ": " + (pointer.empty() ? "/" : pointer) + ": " + reason);
  }

  std::int64_t integer(const json& v, const std::string& ptr, std::int64_t lo, std::int64_t hi) const {
    if (!v.is_number_integer()) fail(ptr, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) fail(ptr, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }

  std::uint64_t seed(const json& v, const std::string& ptr) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(ptr, "expected a non-negative integer");
  }

  double number(const json& v, const std::string& ptr) const {
    if (!v.is_number()) fail(ptr, "expected a number");
    return v.get<double>();
  }

  std::string string(const json& v, const std::string& ptr) const {
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& v, const std::string& ptr) const {
    if (!v.is_array()) fail(ptr, "expected an array");
    if (v.empty()) fail(ptr, "must not be empty");
    return v;
  }

  void only_keys(const json& obj, const std::string& ptr, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(ptr, "expected an object");
    for (const auto& [k, _] : obj.items()) {
      if (!allowed.count(k)) fail(ptr + "/" + escape_token(k), "unknown field '" + k + "'");
    }
  }

 private:
  std::string source_;
  std::map<std::string, int> lines_;
};

const std::set<std::string> kTopKeys = {"master_seed", "parallelism", "profiles_file", "profile", "suites"};
const std::set<std::string> kSuiteKeys = {"kind",   "profile", "param_grid", "digit_tiers", "trials_per_cell",
                                          "prompt", "fonts",   "reps",       "merge",       "axes",
                                          "render_rate"};

}  // namespace

ExperimentSpec parse_spec(std::string_view text, const std::string& source, const SpecOverrides& overrides,
                          const std::filesystem::path& base_dir) {
  json root;
  LineState state;
  std::map<std::string, int> lines;
  LineMappingSax sax(root, state, lines);
  const CountingIterator first(text.data(), &state);
  const CountingIterator last(text.data() + text.size(), &state);
  const bool ok = json::sax_parse(first, last, &sax);
  if (!ok) {
    throw Error(ErrorCode::kValidation, source + ":" + std::to_string(sax.error_line) + ": " + sax.error_message);
  }
  const Doc doc(source, std::move(lines));
  doc.only_keys(root, "", kTopKeys);

  ExperimentSpec spec;
  if (root.contains("master_seed")) spec.master_seed = doc.seed(root["master_seed"], "/master_seed");
  if (root.contains("parallelism")) {
    spec.parallelism = static_cast<int>(doc.integer(root["parallelism"], "/parallelism", 1, 1024));
  }
  if (overrides.seed) spec.master_seed = *overrides.seed;
  if (overrides.parallelism) spec.parallelism = *overrides.parallelism;
  if (root.contains("profiles_file")) {
    std::filesystem::path p = doc.string(root["profiles_file"], "/profiles_file");
    if (p.is_relative()) p = base_dir / p;
    try {
      spec.extra_profiles = load_profiles(p);
    } catch (const Error& e) {
      doc.fail("/profiles_file", e.what());
    }
  }
  std::optional<std::string> default_profile;
  if (root.contains("profile")) default_profile = doc.string(root["profile"], "/profile");

  if (!root.contains("suites")) doc.fail("", "missing required field 'suites'");
  const json& suites = doc.array(root["suites"], "/suites");
  for (std::size_t i = 0; i < suites.size(); ++i) {
    const std::string base = "/suites/" + std::to_string(i);
    const json& s = suites[i];
    doc.only_keys(s, base, kSuiteKeys);
    if (!s.contains("kind")) doc.fail(base, "missing required field 'kind'");
    SuiteKind kind{};
    try {
      kind = suite_kind_from_string(doc.string(s["kind"], base + "/kind"));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kValidation || std::string(e.what()).rfind(source, 0) == 0) throw;
      doc.fail(base + "/kind", e.what());
    }

    std::string profile_name;
    if (overrides.profile) {
      profile_name = *overrides.profile;
    } else if (s.contains("profile")) {
      profile_name = doc.string(s["profile"], base + "/profile");
    } else if (default_profile) {
      profile_name = *default_profile;
    } else {
      doc.fail(base, "no profile given for this suite and no top-level 'profile'");
    }
    ModelProfile profile;
    try {
      profile = find_profile(profile_name, spec.extra_profiles);
    } catch (const Error& e) {
      doc.fail(s.contains("profile") && !overrides.profile ? base + "/profile" : base, e.what());
    }

    SuiteSpec suite = default_suite_spec(kind, profile, spec.master_seed);
    if (s.contains("param_grid")) {
      const json& grid = doc.array(s["param_grid"], base + "/param_grid");
      suite.param_grid.clear();
      for (std::size_t k = 0; k < grid.size(); ++k) {
        suite.param_grid.push_back(doc.number(grid[k], base + "/param_grid/" + std::to_string(k)));
      }
    }
    if (s.contains("digit_tiers")) {
      const json& tiers = doc.array(s["digit_tiers"], base + "/digit_tiers");
      suite.digit_tiers.clear();
      for (std::size_t k = 0; k < tiers.size(); ++k) {
        suite.digit_tiers.push_back(
            static_cast<int>(doc.integer(tiers[k], base + "/digit_tiers/" + std::to_string(k), 1, 18)));
      }
    }
    if (s.contains("trials_per_cell")) {
      suite.trials_per_cell =
          static_cast<int>(doc.integer(s["trials_per_cell"], base + "/trials_per_cell", 1, 1000000));
    }
    if (s.contains("prompt")) suite.prompt_template = doc.string(s["prompt"], base + "/prompt");
    if (s.contains("fonts")) {
      const json& fonts = doc.array(s["fonts"], base + "/fonts");
      suite.font_rates.clear();
      for (std::size_t k = 0; k < fonts.size(); ++k) {
        suite.font_rates.push_back(
            static_cast<int>(doc.integer(fonts[k], base + "/fonts/" + std::to_string(k), 1, 1000)));
      }
    }
    if (s.contains("reps")) suite.reps = static_cast<int>(doc.integer(s["reps"], base + "/reps", 1, 100000));
    if (s.contains("merge")) suite.merge = static_cast<int>(doc.integer(s["merge"], base + "/merge", 1, 64));
    if (s.contains("render_rate")) {
      suite.render_rate = static_cast<int>(doc.integer(s["render_rate"], base + "/render_rate", 1, 1000));
    }
    if (s.contains("axes")) {
      const json& axes = doc.array(s["axes"], base + "/axes");
      suite.axes.clear();
      for (std::size_t k = 0; k < axes.size(); ++k) {
        const std::string ptr = base + "/axes/" + std::to_string(k);
        try {
          suite.axes.push_back(axis_from_string(doc.string(axes[k], ptr)));
        } catch (const Error& e) {
          if (std::string(e.what()).rfind(source, 0) == 0) throw;
          doc.fail(ptr, e.what());
        }
      }
    }
    try {
      suite.validate();
    } catch (const Error& e) {
      doc.fail(base, e.what());
    }
    spec.suites.push_back(std::move(suite));
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path, const SpecOverrides& overrides) {
  return parse_spec(read_text_file(path), path.string(), overrides, path.parent_path());
}

}  // namespace vprobe
