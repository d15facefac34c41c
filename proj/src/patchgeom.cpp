#include "vprobe/patchgeom.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "vprobe/error.hpp"

namespace vprobe {

void ModelProfile::validate() const {
  if (width < 1 || height < 1 || patch < 1 || merge_factor < 1) {
    throw Error(ErrorCode::kValidation, "profile '" + name + "': dimensions must be positive");
  }
  if (width % patch != 0 || height % patch != 0) {
    throw Error(ErrorCode::kValidation, "profile '" + name + "': patch size " +
                                            std::to_string(patch) + " does not divide " +
                                            std::to_string(width) + "x" + std::to_string(height));
  }
}

const std::vector<ModelProfile>& builtin_profiles() {
  // Fuyu-8B tiles 30x30 patches over a variable grid; frozen at 10x10 here.
  static const std::vector<ModelProfile> profiles = {
      {"blip2", 224, 224, 14, 1},
      {"instructblip", 224, 224, 14, 1},
      {"llava-1.5", 336, 336, 14, 1},
      {"qwen-vl-chat", 448, 448, 14, 1},
      {"fuyu-8b", 300, 300, 30, 1},
  };
  return profiles;
}

const ModelProfile& find_profile(std::string_view name, const std::vector<ModelProfile>& extra) {
  for (const auto& p : extra) {
    if (p.name == name) return p;
  }
  for (const auto& p : builtin_profiles()) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kValidation, "unknown model profile '" + std::string(name) + "'");
}

std::vector<ModelProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open profile file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kValidation, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kValidation, path.string() + ": expected an object");

  std::vector<ModelProfile> out;
  for (const auto& [name, entry] : doc.items()) {
    try {
      const auto& res = entry.at("resolution");
      ModelProfile p{name, res.at(0).get<int>(), res.at(1).get<int>(), entry.at("patch_size").get<int>(), 1};
      p.validate();
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kValidation, path.string() + ": profile '" + name + "': " + e.what());
    }
  }
  return out;
}

ModelProfile merged_grid(const ModelProfile& profile, int k) {
  if (k < 1 || profile.rows() % k != 0 || profile.cols() % k != 0) {
    throw Error(ErrorCode::kNonDivisibleMerge,
                "cannot merge " + std::to_string(profile.rows()) + "x" + std::to_string(profile.cols()) +
                    " grid by " + std::to_string(k));
  }
  ModelProfile out = profile;
  out.patch = profile.patch * k;
  out.merge_factor = profile.merge_factor * k;
  return out;
}

Point cell_center_anchor(const ModelProfile& profile, int row, int col, int text_w, int text_h) {
  if (row < 0 || col < 0 || row >= profile.rows() || col >= profile.cols()) {
    throw Error(ErrorCode::kOutOfBounds, "cell (" + std::to_string(row) + "," + std::to_string(col) +
                                             ") outside the patch grid");
  }
  if (text_w > profile.patch || text_h > profile.patch) {
    throw Error(ErrorCode::kTextLargerThanCell,
                std::to_string(text_w) + "x" + std::to_string(text_h) + " text does not fit a " +
                    std::to_string(profile.patch) + "px cell");
  }
  const Rect cell = profile.cell(row, col);
  return {cell.x + (cell.w - text_w) / 2, cell.y + (cell.h - text_h) / 2};
}

const char* to_string(Axis axis) { return axis == Axis::kVertical ? "vertical" : "horizontal"; }

Axis axis_from_string(std::string_view name) {
  if (name == "vertical") return Axis::kVertical;
  if (name == "horizontal") return Axis::kHorizontal;
  throw Error(ErrorCode::kValidation, "unknown axis '" + std::string(name) + "'");
}

CutReport classify_cut(const Rect& bbox, const ModelProfile& profile, Axis axis) {
  CutReport report;
  report.axis = axis;
  const bool vertical = axis == Axis::kVertical;
  const int start = vertical ? bbox.x : bbox.y;
  const int length = vertical ? bbox.w : bbox.h;
  const int span = vertical ? profile.width : profile.height;
  const int p = profile.patch;

  for (int boundary = (start / p + 1) * p; boundary < start + length; boundary += p) {
    if (boundary > start) report.crossed_boundaries.push_back(boundary);
  }
  report.is_cut = !report.crossed_boundaries.empty();
  const int travel = span - length;
  report.range_ratio = travel > 0 ? static_cast<double>(start) / travel : 0.0;
  return report;
}

int token_distance(const ModelProfile& profile, const Rect& bbox, Axis axis) {
  const CutReport report = classify_cut(bbox, profile, axis);
  if (!report.is_cut) {
    throw Error(ErrorCode::kNotCut, std::string("bbox is not cut along the ") + to_string(axis) + " axis");
  }
  const int boundary = report.crossed_boundaries.front();
  if (axis == Axis::kVertical) {
    return profile.patch_index(boundary, bbox.y) - profile.patch_index(boundary - 1, bbox.y);
  }
  return profile.patch_index(bbox.x, boundary) - profile.patch_index(bbox.x, boundary - 1);
}

}  // namespace vprobe
