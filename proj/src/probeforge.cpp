#include "vprobe/probeforge.hpp"

#include <algorithm>
#include <cstdio>

#include "vprobe/error.hpp"
#include "vprobe/raster.hpp"
#include "vprobe/rng.hpp"

namespace vprobe {
namespace {

constexpr int kDistractorPadding = 2;
constexpr int kMaxPlacementAttempts = 1000;
constexpr int kMaxDistractors = 9;  // labels b..j

std::string fmt_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

nlohmann::json rect_json(const Rect& r) { return nlohmann::json::array({r.x, r.y, r.w, r.h}); }

Rect rect_from_json(const nlohmann::json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

std::string make_trial_id(const SuiteSpec& spec, const std::string& cell, int index, int rep) {
  const auto seed = derive_seed(spec.master_seed, {to_string(spec.kind), spec.profile.name, cell,
                                                   std::to_string(index), std::to_string(rep)});
  return hex64(seed);
}

std::string image_path(SuiteKind kind, const std::string& trial_id) {
  return std::string("images/") + to_string(kind) + "/" + trial_id + ".png";
}

// Target numbers depend on the tier and index only, so every level of the swept
// parameter reads the same set of numbers.
std::string target_number(const SuiteSpec& spec, int digits, int index) {
  const auto seed = derive_seed(spec.master_seed, {to_string(spec.kind), "target",
                                                   "digits=" + std::to_string(digits),
                                                   std::to_string(index)});
  return draw_number(seed, digits);
}

std::string distinct_number(CounterRng& rng, int digits, const std::string& avoid) {
  for (;;) {
    std::string value = draw_number(rng.next(), digits);
    if (value != avoid) return value;
  }
}

Point centered(const ModelProfile& p, const Rect& size) {
  return {(p.width - size.w) / 2, (p.height - size.h) / 2};
}

std::string label_for(int j) { return std::string(1, static_cast<char>('a' + j)); }

TrialRecord new_record(const SuiteSpec& spec, const std::string& cell, int index, int rep) {
  TrialRecord rec;
  rec.trial_id = make_trial_id(spec, cell, index, rep);
  rec.suite = spec.kind;
  rec.profile = spec.profile.name;
  rec.prompt = spec.prompt_template;
  rec.image = image_path(spec.kind, rec.trial_id);
  return rec;
}

void require_kind(const SuiteSpec& spec, SuiteKind kind) {
  spec.validate();
  if (spec.kind != kind) {
    throw Error(ErrorCode::kInvalidArgument, std::string("expected a ") + to_string(kind) +
                                                 " spec, got " + to_string(spec.kind));
  }
}

int as_int(double v, const char* what) {
  const auto i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw Error(ErrorCode::kValidation, std::string(what) + " must be an integer, got " + fmt_param(v));
  }
  return i;
}

// Digits that fit one patch when packed with 1-px tracking: 3 for 14-px
// patches and 6 for 30-px ones at rate 8.
int patch_digit_capacity(int patch, int rate) {
  const int adv = scaled_advance('0', rate);
  return std::max(1, (patch + 1) / (adv + 1));
}

}  // namespace

const char* to_string(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::kQuality: return "quality";
    case SuiteKind::kSize: return "size";
    case SuiteKind::kDistractor: return "distractor";
    case SuiteKind::kLocation: return "location";
    case SuiteKind::kBoundaryCut: return "boundary_cut";
  }
  return "unknown";
}

SuiteKind suite_kind_from_string(std::string_view name) {
  for (auto k : {SuiteKind::kQuality, SuiteKind::kSize, SuiteKind::kDistractor, SuiteKind::kLocation,
                 SuiteKind::kBoundaryCut}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kValidation, "unknown suite kind '" + std::string(name) + "'");
}

void SuiteSpec::validate() const {
  profile.validate();
  if (param_grid.empty()) throw Error(ErrorCode::kValidation, "param_grid must not be empty");
  if (trials_per_cell < 1) throw Error(ErrorCode::kValidation, "trials_per_cell must be >= 1");
  if (digit_tiers.empty()) throw Error(ErrorCode::kValidation, "digit_tiers must not be empty");
  for (int d : digit_tiers) {
    if (d < 1 || d > 18) throw Error(ErrorCode::kValidation, "digit tiers must be in [1, 18]");
  }
  if (render_rate < 1) throw Error(ErrorCode::kValidation, "render_rate must be >= 1");
  if (prompt_template.empty()) throw Error(ErrorCode::kValidation, "prompt must not be empty");
  switch (kind) {
    case SuiteKind::kQuality:
      for (double r : param_grid) {
        const int rate = as_int(r, "sampling rate");
        if (rate < 1 || rate > render_rate) {
          throw Error(ErrorCode::kValidation, "sampling rates must be in [1, render_rate]");
        }
      }
      break;
    case SuiteKind::kSize:
      for (double s : param_grid) {
        if (s < 1.0) throw Error(ErrorCode::kValidation, "scales must be >= 1");
        (void)Ratio::from_decimal(s);
      }
      break;
    case SuiteKind::kDistractor:
    case SuiteKind::kLocation:
      for (double k : param_grid) {
        const int n = as_int(k, "distractor count");
        if (n < 0 || n > kMaxDistractors) {
          throw Error(ErrorCode::kValidation, "distractor counts must be in [0, 9]");
        }
      }
      if (kind == SuiteKind::kDistractor) {
        if (font_rates.empty()) throw Error(ErrorCode::kValidation, "font_rates must not be empty");
        if (reps < 1) throw Error(ErrorCode::kValidation, "reps must be >= 1");
      }
      if (merge < 1) throw Error(ErrorCode::kValidation, "merge must be >= 1");
      break;
    case SuiteKind::kBoundaryCut:
      for (double step : param_grid) {
        if (as_int(step, "sweep step") < 1) throw Error(ErrorCode::kValidation, "sweep step must be >= 1");
      }
      if (axes.empty()) throw Error(ErrorCode::kValidation, "axes must not be empty");
      if (merge < 1) throw Error(ErrorCode::kValidation, "merge must be >= 1");
      break;
  }
}

SuiteSpec default_suite_spec(SuiteKind kind, const ModelProfile& profile, std::uint64_t master_seed) {
  SuiteSpec spec;
  spec.kind = kind;
  spec.profile = profile;
  spec.master_seed = master_seed;
  switch (kind) {
    case SuiteKind::kQuality:
      for (int r = 2; r <= 20; r += 2) spec.param_grid.push_back(r);
      spec.digit_tiers = {3, 5, 7};
      spec.trials_per_cell = 500;
      spec.render_rate = 20;
      spec.prompt_template = std::string(kNumberPrompt);
      break;
    case SuiteKind::kSize:
      for (int s2 = 2; s2 <= 11; ++s2) spec.param_grid.push_back(s2 * 0.5);
      spec.digit_tiers = {3, 5, 7};
      spec.trials_per_cell = 500;
      spec.render_rate = 8;
      spec.prompt_template = std::string(kNumberPrompt);
      break;
    case SuiteKind::kDistractor:
      for (int k = 0; k <= 9; ++k) spec.param_grid.push_back(k);
      spec.digit_tiers = {3};
      spec.trials_per_cell = 100;
      spec.font_rates = {8, 12};
      spec.reps = 5;
      spec.prompt_template = std::string(kVariablePrompt);
      break;
    case SuiteKind::kLocation:
      // the OCR-enhanced model is probed with nine distractors, the rest with one
      spec.param_grid = {0, profile.name == "qwen-vl-chat" ? 9.0 : 1.0};
      spec.digit_tiers = {3};
      spec.trials_per_cell = 100;
      spec.render_rate = 8;
      spec.merge = profile.patch == 14 ? 2 : 1;
      spec.prompt_template = std::string(kVariablePrompt);
      break;
    case SuiteKind::kBoundaryCut:
      spec.param_grid = {1};
      spec.render_rate = 8;
      spec.digit_tiers = {patch_digit_capacity(profile.patch, spec.render_rate)};
      spec.trials_per_cell = 100;
      spec.axes = {Axis::kVertical, Axis::kHorizontal};
      spec.prompt_template = std::string(kNumberPrompt);
      break;
  }
  return spec;
}

std::vector<TrialRecord> build_quality_suite(const SuiteSpec& spec) {
  require_kind(spec, SuiteKind::kQuality);
  const ModelProfile& p = spec.profile;
  std::vector<TrialRecord> out;
  for (int digits : spec.digit_tiers) {
    for (int i = 0; i < spec.trials_per_cell; ++i) {
      const std::string number = target_number(spec, digits, i);
      Rect box = measure_text(number, spec.render_rate);
      // Multiples of the render rate sit on the block grid of every target
      // rate, so each degradation starts from the same phase.
      const Point anchor = centered(p, box);
      box.x = anchor.x / spec.render_rate * spec.render_rate;
      box.y = anchor.y / spec.render_rate * spec.render_rate;
      if (!box.inside(p.width, p.height)) {
        throw Error(ErrorCode::kOutOfBounds, number + " does not fit the " + p.name + " canvas");
      }
      for (double r : spec.param_grid) {
        const int rate = static_cast<int>(r);
        TrialRecord rec = new_record(spec, "rate=" + std::to_string(rate) + "|digits=" + std::to_string(digits), i, 0);
        rec.ground_truth = number;
        rec.placements.push_back({"", number, box, spec.render_rate});
        rec.params = {{"digits", digits},
                      {"sampling_rate", rate},
                      {"render_rate", spec.render_rate},
                      {"index", i}};
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::vector<TrialRecord> build_size_suite(const SuiteSpec& spec) {
  require_kind(spec, SuiteKind::kSize);
  const ModelProfile& p = spec.profile;
  std::vector<TrialRecord> out;
  for (int digits : spec.digit_tiers) {
    for (int i = 0; i < spec.trials_per_cell; ++i) {
      const std::string number = target_number(spec, digits, i);
      Rect base = measure_text(number, spec.render_rate);
      const Point anchor = centered(p, base);
      base.x = anchor.x;
      base.y = anchor.y;
      for (double s : spec.param_grid) {
        const Ratio f = Ratio::from_decimal(s);
        // smallest crop whose enlargement covers the canvas
        const int cw = static_cast<int>((p.width * f.den + f.num - 1) / f.num);
        const int ch = static_cast<int>((p.height * f.den + f.num - 1) / f.num);
        // centred on the text (the canvas centre up to rounding), so odd
        // crop/text size differences cannot push the text past the edge
        const Rect crop{std::clamp(base.x - (cw - base.w) / 2, 0, p.width - cw),
                        std::clamp(base.y - (ch - base.h) / 2, 0, p.height - ch), cw, ch};
        const Interval ix = scaled_interval(base.x - crop.x, base.w, f);
        const Interval iy = scaled_interval(base.y - crop.y, base.h, f);
        const Rect scaled{static_cast<int>(ix.begin), static_cast<int>(iy.begin),
                          static_cast<int>(ix.end - ix.begin), static_cast<int>(iy.end - iy.begin)};
        if (!crop.contains(base) || !scaled.inside(p.width, p.height)) {
          throw Error(ErrorCode::kTextLargerThanCrop,
                      std::to_string(digits) + "-digit text does not fit the crop at scale " + fmt_param(s));
        }
        TrialRecord rec = new_record(spec, "scale=" + fmt_param(s) + "|digits=" + std::to_string(digits), i, 0);
        rec.ground_truth = number;
        rec.placements.push_back({"", number, scaled, spec.render_rate});
        rec.params = {{"digits", digits},
                      {"scale", s},
                      {"base_rate", spec.render_rate},
                      {"base_bbox", rect_json(base)},
                      {"crop", rect_json(crop)},
                      {"index", i}};
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::vector<TrialRecord> build_distractor_suite(const SuiteSpec& spec) {
  require_kind(spec, SuiteKind::kDistractor);
  const ModelProfile& p = spec.profile;
  std::vector<TrialRecord> out;
  for (int digits : spec.digit_tiers) {
    for (double kv : spec.param_grid) {
      const int k = static_cast<int>(kv);
      for (int font : spec.font_rates) {
        for (int i = 0; i < spec.trials_per_cell; ++i) {
          const std::string number = target_number(spec, digits, i);
          for (int rep = 0; rep < spec.reps; ++rep) {
            const std::string cell = "k=" + std::to_string(k) + "|font=" + std::to_string(font) +
                                     "|digits=" + std::to_string(digits);
            TrialRecord rec = new_record(spec, cell, i, rep);
            rec.ground_truth = number;

            const std::string target_text = "a=" + number;
            Rect target = measure_text(target_text, font);
            const Point anchor = centered(p, target);
            target.x = anchor.x;
            target.y = anchor.y;
            if (!target.inside(p.width, p.height)) {
              throw Error(ErrorCode::kOutOfBounds, "target does not fit the " + p.name + " canvas");
            }
            rec.placements.push_back({"a", target_text, target, font});

            CounterRng rng(derive_seed(spec.master_seed, {to_string(spec.kind), p.name, cell,
                                                          std::to_string(i), std::to_string(rep)}));
            for (int j = 1; j <= k; ++j) {
              const std::string label = label_for(j);
              const std::string text = label + "=" + distinct_number(rng, digits, number);
              Rect box = measure_text(text, font);
              bool placed = false;
              for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
                box.x = static_cast<int>(rng.uniform(0, static_cast<std::uint64_t>(p.width - box.w)));
                box.y = static_cast<int>(rng.uniform(0, static_cast<std::uint64_t>(p.height - box.h)));
                placed = true;
                for (const auto& other : rec.placements) {
                  if (box.padded(kDistractorPadding).intersects(other.bbox.padded(kDistractorPadding))) {
                    placed = false;
                    break;
                  }
                }
              }
              if (!placed) {
                throw Error(ErrorCode::kPlacementFailure,
                            "could not place distractor " + label + " after " +
                                std::to_string(kMaxPlacementAttempts) + " attempts");
              }
              rec.placements.push_back({label, text, box, font});
            }
            rec.params = {{"digits", digits}, {"distractors", k}, {"font", font}, {"index", i}, {"rep", rep}};
            out.push_back(std::move(rec));
          }
        }
      }
    }
  }
  return out;
}

std::vector<TrialRecord> build_location_suite(const SuiteSpec& spec) {
  require_kind(spec, SuiteKind::kLocation);
  const ModelProfile grid = merged_grid(spec.profile, spec.merge);
  const int cells = grid.rows() * grid.cols();
  std::vector<TrialRecord> out;
  for (int digits : spec.digit_tiers) {
    for (double kv : spec.param_grid) {
      const int k = static_cast<int>(kv);
      if (k > cells - 1) throw Error(ErrorCode::kValidation, "more distractors than free cells");
      for (int row = 0; row < grid.rows(); ++row) {
        for (int col = 0; col < grid.cols(); ++col) {
          for (int i = 0; i < spec.trials_per_cell; ++i) {
            const std::string number = target_number(spec, digits, i);
            const std::string cell = "row=" + std::to_string(row) + "|col=" + std::to_string(col) +
                                     "|k=" + std::to_string(k) + "|digits=" + std::to_string(digits);
            TrialRecord rec = new_record(spec, cell, i, 0);
            rec.ground_truth = number;

            const std::string target_text = "a=" + number;
            Rect box = measure_text(target_text, spec.render_rate);
            const Point anchor = cell_center_anchor(grid, row, col, box.w, box.h);
            box.x = anchor.x;
            box.y = anchor.y;
            rec.placements.push_back({"a", target_text, box, spec.render_rate});

            // k distinct cells drawn uniformly from the remaining ones
            CounterRng rng(derive_seed(spec.master_seed, {to_string(spec.kind), grid.name, cell, std::to_string(i)}));
            std::vector<int> free_cells;
            free_cells.reserve(static_cast<std::size_t>(cells - 1));
            for (int c = 0; c < cells; ++c) {
              if (c != row * grid.cols() + col) free_cells.push_back(c);
            }
            for (int j = 1; j <= k; ++j) {
              const auto pick = rng.uniform(static_cast<std::uint64_t>(j - 1), free_cells.size() - 1);
              std::swap(free_cells[static_cast<std::size_t>(j - 1)], free_cells[pick]);
              const int chosen = free_cells[static_cast<std::size_t>(j - 1)];
              const std::string label = label_for(j);
              const std::string text = label + "=" + distinct_number(rng, digits, number);
              Rect dbox = measure_text(text, spec.render_rate);
              const Point da = cell_center_anchor(grid, chosen / grid.cols(), chosen % grid.cols(), dbox.w, dbox.h);
              dbox.x = da.x;
              dbox.y = da.y;
              rec.placements.push_back({label, text, dbox, spec.render_rate});
            }
            rec.params = {{"digits", digits}, {"distractors", k}, {"row", row},   {"col", col},
                          {"rows", grid.rows()}, {"cols", grid.cols()}, {"cell_size", grid.patch}, {"index", i}};
            out.push_back(std::move(rec));
          }
        }
      }
    }
  }
  return out;
}

std::vector<TrialRecord> build_boundary_cut_suite(const SuiteSpec& spec) {
  require_kind(spec, SuiteKind::kBoundaryCut);
  const ModelProfile grid = merged_grid(spec.profile, spec.merge);
  std::vector<TrialRecord> out;
  for (int digits : spec.digit_tiers) {
    // packed with the 1-px tracking the digit capacity assumes
    const Rect size = measure_text(std::string(static_cast<std::size_t>(digits), '0'), spec.render_rate, 1);
    if (size.w > grid.width || size.h > grid.height) {
      throw Error(ErrorCode::kOutOfBounds, "text wider than the canvas");
    }
    for (double step_v : spec.param_grid) {
      const int step = static_cast<int>(step_v);
      for (Axis axis : spec.axes) {
        const bool vertical = axis == Axis::kVertical;
        const int last = vertical ? grid.width - size.w : grid.height - size.h;
        for (int offset = 0; offset <= last; offset += step) {
          const Rect box = vertical ? Rect{offset, (grid.height - size.h) / 2, size.w, size.h}
                                    : Rect{(grid.width - size.w) / 2, offset, size.w, size.h};
          const CutReport cut = classify_cut(box, grid, axis);
          const std::string cell = std::string("axis=") + to_string(axis) + "|offset=" + std::to_string(offset) +
                                   "|step=" + std::to_string(step) + "|digits=" + std::to_string(digits);
          for (int i = 0; i < spec.trials_per_cell; ++i) {
            const std::string number = target_number(spec, digits, i);
            TrialRecord rec = new_record(spec, cell, i, 0);
            rec.ground_truth = number;
            rec.placements.push_back({"", number, box, spec.render_rate, 1});
            rec.params = {{"digits", digits},
                          {"axis", to_string(axis)},
                          {"offset", offset},
                          {"range_ratio", cut.range_ratio},
                          {"is_cut", cut.is_cut},
                          {"crossed", cut.crossed_boundaries},
                          {"patch", grid.patch},
                          {"index", i}};
            out.push_back(std::move(rec));
          }
        }
      }
    }
  }
  return out;
}

std::vector<TrialRecord> build_suite(const SuiteSpec& spec) {
  switch (spec.kind) {
    case SuiteKind::kQuality: return build_quality_suite(spec);
    case SuiteKind::kSize: return build_size_suite(spec);
    case SuiteKind::kDistractor: return build_distractor_suite(spec);
    case SuiteKind::kLocation: return build_location_suite(spec);
    case SuiteKind::kBoundaryCut: return build_boundary_cut_suite(spec);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown suite kind");
}

GrayImage render_trial(const TrialRecord& record, const ModelProfile& profile) {
  GrayImage canvas(profile.width, profile.height);
  switch (record.suite) {
    case SuiteKind::kQuality: {
      for (const auto& pl : record.placements) render_text(canvas, pl.text, pl.rate, {pl.bbox.x, pl.bbox.y}, pl.spacing);
      return degrade_sampling_rate(canvas, record.params.at("render_rate").get<int>(),
                                   record.params.at("sampling_rate").get<int>());
    }
    case SuiteKind::kSize: {
      const Rect base = rect_from_json(record.params.at("base_bbox"));
      const Rect crop = rect_from_json(record.params.at("crop"));
      const Ratio f = Ratio::from_decimal(record.params.at("scale").get<double>());
      for (const auto& pl : record.placements) render_text(canvas, pl.text, pl.rate, {base.x, base.y}, pl.spacing);
      return crop_upsample(canvas, crop, f, profile.width, profile.height);
    }
    case SuiteKind::kDistractor:
    case SuiteKind::kLocation:
    case SuiteKind::kBoundaryCut:
      for (const auto& pl : record.placements) render_text(canvas, pl.text, pl.rate, {pl.bbox.x, pl.bbox.y}, pl.spacing);
      return canvas;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown suite kind");
}

}  // namespace vprobe
