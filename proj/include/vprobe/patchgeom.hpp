#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vprobe/image.hpp"

namespace vprobe {

// Input resolution and square patch tiling of a vision encoder.
struct ModelProfile {
  std::string name;
  int width = 0;
  int height = 0;
  int patch = 0;  // effective patch edge, already multiplied by merge_factor
  int merge_factor = 1;

  int rows() const { return height / patch; }
  int cols() const { return width / patch; }
  Rect cell(int row, int col) const { return {col * patch, row * patch, patch, patch}; }
  int patch_index(int x, int y) const { return (y / patch) * cols() + x / patch; }

  void validate() const;
  friend bool operator==(const ModelProfile&, const ModelProfile&) = default;
};

// blip2, instructblip, llava-1.5, qwen-vl-chat, fuyu-8b.
const std::vector<ModelProfile>& builtin_profiles();

// Looks in `extra` first, then the built-ins. Throws kValidation if unknown.
const ModelProfile& find_profile(std::string_view name, const std::vector<ModelProfile>& extra = {});

// JSON object keyed by model name:
//   {"my-model": {"resolution": [W, H], "patch_size": P}, ...}
std::vector<ModelProfile> load_profiles(const std::filesystem::path& path);

ModelProfile merged_grid(const ModelProfile& profile, int k);

// Top-left anchor that centres a text_w x text_h box in cell (row, col);
// half-pixel ties go toward the top-left.
Point cell_center_anchor(const ModelProfile& profile, int row, int col, int text_w, int text_h);

enum class Axis { kVertical, kHorizontal };

const char* to_string(Axis axis);
Axis axis_from_string(std::string_view name);

struct CutReport {
  Axis axis = Axis::kVertical;
  std::vector<int> crossed_boundaries;
  bool is_cut = false;
  double range_ratio = 0.0;
};

// Vertical: patch column boundaries strictly inside (bbox.x, bbox.x + bbox.w).
// Horizontal: the analogous row boundaries.
CutReport classify_cut(const Rect& bbox, const ModelProfile& profile, Axis axis);

// Raster-order index gap between the patches on either side of the first
// crossed boundary: 1 for vertical cuts, the grid column count for horizontal.
int token_distance(const ModelProfile& profile, const Rect& bbox, Axis axis);

}  // namespace vprobe
