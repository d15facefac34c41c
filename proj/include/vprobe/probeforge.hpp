#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vprobe/image.hpp"
#include "vprobe/patchgeom.hpp"

namespace vprobe {

enum class SuiteKind { kQuality, kSize, kDistractor, kLocation, kBoundaryCut };

const char* to_string(SuiteKind kind);
SuiteKind suite_kind_from_string(std::string_view name);

inline constexpr std::string_view kNumberPrompt = "What is the number on the image?";
inline constexpr std::string_view kVariablePrompt =
    "What is the number assigned to variable 'a' in the image?";

struct SuiteSpec {
  SuiteKind kind = SuiteKind::kQuality;
  ModelProfile profile;
  // quality: target sampling rates; size: scale factors; distractor: distractor
  // counts; location: distractor variants; boundary_cut: sweep step in pixels.
  std::vector<double> param_grid;
  std::vector<int> digit_tiers;
  int trials_per_cell = 1;
  std::uint64_t master_seed = 0;
  std::string prompt_template;

  int render_rate = 8;              // quality renders at 20 then degrades
  std::vector<int> font_rates;      // distractor tiers
  int reps = 1;                     // distractor position resamplings
  int merge = 1;                    // location grid merge factor
  std::vector<Axis> axes;           // boundary_cut sweep directions

  void validate() const;
  bool operator==(const SuiteSpec&) const = default;
};

// Parameter grids, tiers and counts of the reference protocol for `kind`.
SuiteSpec default_suite_spec(SuiteKind kind, const ModelProfile& profile, std::uint64_t master_seed);

struct Placement {
  std::string label;  // "a", "b", ... or empty for a bare number
  std::string text;   // rendered string, e.g. "a=593"
  Rect bbox;          // in final image coordinates
  int rate = 8;       // glyph sampling rate the text was rendered at
  int spacing = 0;    // gap between glyphs in pixels, 0 = letter_spacing(rate)

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct TrialRecord {
  std::string trial_id;
  SuiteKind suite = SuiteKind::kQuality;
  std::string profile;
  nlohmann::json params = nlohmann::json::object();
  std::string ground_truth;
  std::string prompt;
  std::vector<Placement> placements;
  std::string image;  // relative path, images/<suite>/<trial_id>.png

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

std::vector<TrialRecord> build_quality_suite(const SuiteSpec& spec);
std::vector<TrialRecord> build_size_suite(const SuiteSpec& spec);
std::vector<TrialRecord> build_distractor_suite(const SuiteSpec& spec);
std::vector<TrialRecord> build_location_suite(const SuiteSpec& spec);
std::vector<TrialRecord> build_boundary_cut_suite(const SuiteSpec& spec);

// Dispatches on spec.kind.
std::vector<TrialRecord> build_suite(const SuiteSpec& spec);

// Re-creates the stimulus from the record alone.
GrayImage render_trial(const TrialRecord& record, const ModelProfile& profile);

}  // namespace vprobe
