#pragma once

#include <string>
#include <vector>

#include "vprobe/analysis.hpp"
#include "vprobe/annotations.hpp"

namespace vprobe {

// All doubles are written with six decimals so reports diff cleanly.
std::string format_double(double v);

// series,param,mean,n,n_errors,ci_low,ci_high
std::string curve_csv(const std::vector<CurvePoint>& points);
// row,col,mean,n,n_errors
std::string heatmap_csv(const std::vector<HeatmapCell>& cells);
// axis,view,bin_low,bin_high,mean,n,cut_fraction
std::string boundary_csv(const std::vector<BoundaryReport>& reports);
// axis,view,cut_mean,n_cut,uncut_mean,n_uncut
std::string boundary_summary_csv(const std::vector<BoundaryReport>& reports);
// bucket,n,key_min,key_max,area_min,area_max,pixels_min,pixels_max,mean_distractors,acc_inclusion,acc_exact,mean_gpm
std::string quantile_csv(const std::vector<SliceBucket>& buckets);

// Line chart, one polyline per series, y in [0, 1].
std::string curve_svg(const std::vector<CurvePoint>& points, const std::string& title, const std::string& x_label);
// Grid of squares; lighter means higher GPM.
std::string heatmap_svg(const std::vector<HeatmapCell>& cells, const std::string& title);

}  // namespace vprobe
