#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "oracles.hpp"
#include "vprobe/error.hpp"
#include "vprobe/manifest.hpp"
#include "vprobe/probeforge.hpp"
#include "vprobe/raster.hpp"

namespace {

using namespace vprobe;

SuiteSpec small(SuiteKind kind, const char* profile = "blip2", int trials = 2) {
  SuiteSpec s = default_suite_spec(kind, find_profile(profile), 17);
  s.trials_per_cell = trials;
  return s;
}

TEST(Suites, ReferenceCardinalities) {
  const auto& llava = find_profile("llava-1.5");
  EXPECT_EQ(build_suite(default_suite_spec(SuiteKind::kQuality, llava, 1)).size(), 15000u);
  EXPECT_EQ(build_suite(default_suite_spec(SuiteKind::kSize, llava, 1)).size(), 15000u);
  EXPECT_EQ(build_suite(default_suite_spec(SuiteKind::kDistractor, llava, 1)).size(), 10000u);
}

TEST(Suites, LocationGrids) {
  for (auto [name, cells] : {std::pair{"blip2", 64}, std::pair{"instructblip", 64}, std::pair{"fuyu-8b", 100}}) {
    const auto recs = build_suite(small(SuiteKind::kLocation, name, 1));
    std::set<std::pair<int, int>> seen;
    for (const auto& r : recs) seen.emplace(r.params.at("row").get<int>(), r.params.at("col").get<int>());
    EXPECT_EQ(static_cast<int>(seen.size()), cells) << name;
    EXPECT_EQ(recs.size(), 2u * static_cast<std::size_t>(cells)) << name;
  }
  EXPECT_EQ(default_suite_spec(SuiteKind::kLocation, find_profile("qwen-vl-chat"), 0).param_grid,
            (std::vector<double>{0, 9}));
}

TEST(Suites, TrialIdsUniqueAndBuildsDeterministic) {
  for (auto kind : {SuiteKind::kQuality, SuiteKind::kSize, SuiteKind::kDistractor, SuiteKind::kLocation,
                    SuiteKind::kBoundaryCut}) {
    const auto a = build_suite(small(kind));
    const auto b = build_suite(small(kind));
    EXPECT_EQ(a, b) << to_string(kind);
    std::set<std::string> ids;
    for (const auto& r : a) ids.insert(r.trial_id);
    EXPECT_EQ(ids.size(), a.size()) << to_string(kind);
  }
  auto other = small(SuiteKind::kQuality);
  other.master_seed = 18;
  EXPECT_NE(build_suite(other).front().trial_id, build_suite(small(SuiteKind::kQuality)).front().trial_id);
}

TEST(Suites, SweepLevelsShareNumbers) {
  const auto recs = build_suite(small(SuiteKind::kQuality));
  std::map<std::pair<int, int>, std::set<std::string>> by;
  for (const auto& r : recs) by[{r.params.at("digits").get<int>(), r.params.at("index").get<int>()}].insert(r.ground_truth);
  for (const auto& [k, truths] : by) EXPECT_EQ(truths.size(), 1u);
}

TEST(Quality, RateTwentyEqualsDirectRender) {
  const auto& p = find_profile("blip2");
  const auto recs = build_suite(small(SuiteKind::kQuality));
  int checked = 0;
  for (const auto& r : recs) {
    const GrayImage img = render_trial(r, p);
    GrayImage direct(p.width, p.height);
    const auto& pl = r.placements.at(0);
    render_text(direct, pl.text, 20, {pl.bbox.x, pl.bbox.y});
    const int rate = r.params.at("sampling_rate").get<int>();
    if (rate == 20) {
      EXPECT_EQ(img, direct);
      ++checked;
    } else if (rate == 10) {
      for (int y = 0; y + 1 < p.height; y += 2)
        for (int x = 0; x + 1 < p.width; x += 2)
          ASSERT_TRUE(img.at(x, y) == img.at(x + 1, y) && img.at(x, y) == img.at(x, y + 1) &&
                      img.at(x, y) == img.at(x + 1, y + 1));
      EXPECT_EQ(oracle::ink_box(img), oracle::ink_box(direct));
    }
    EXPECT_EQ(pl.bbox.x % 20, 0);
    EXPECT_EQ(pl.bbox.y % 20, 0);
  }
  EXPECT_GT(checked, 0);
}

TEST(Size, UnitScaleIsBaseAndTripleScaleHasNineTimesInk) {
  const auto& p = find_profile("fuyu-8b");
  auto spec = small(SuiteKind::kSize, "fuyu-8b", 1);
  spec.param_grid = {1.0, 3.0};
  spec.digit_tiers = {3};
  const auto recs = build_suite(spec);
  ASSERT_EQ(recs.size(), 2u);
  const auto& pl = recs[0].placements.at(0);
  GrayImage base(p.width, p.height);
  const auto& b = recs[0].params.at("base_bbox");
  render_text(base, pl.text, 8, {b.at(0).get<int>(), b.at(1).get<int>()});
  for (const auto& r : recs) {
    const GrayImage img = render_trial(r, p);
    const double s = r.params.at("scale").get<double>();
    if (s == 1.0) {
      EXPECT_EQ(img, base);
    }
    if (s == 3.0) {
      EXPECT_EQ(oracle::dark(img), 9 * oracle::dark(base));
      EXPECT_EQ(oracle::ink_box(img), r.placements[0].bbox);
    }
  }
}

TEST(Distractor, PlacementsDoNotOverlapAndTargetIsCentred) {
  const auto& p = find_profile("llava-1.5");
  auto spec = small(SuiteKind::kDistractor, "llava-1.5", 3);
  const auto recs = build_suite(spec);
  EXPECT_EQ(recs.size(), 10u * 2u * 3u * 5u);
  for (const auto& r : recs) {
    const int k = r.params.at("distractors").get<int>();
    ASSERT_EQ(static_cast<int>(r.placements.size()), k + 1);
    const auto& a = r.placements[0];
    EXPECT_EQ(a.label, "a");
    EXPECT_EQ(a.text, "a=" + r.ground_truth);
    EXPECT_EQ(a.bbox.x, (p.width - a.bbox.w) / 2);
    EXPECT_EQ(a.bbox.y, (p.height - a.bbox.h) / 2);
    EXPECT_EQ(r.prompt, std::string(kVariablePrompt));
    for (std::size_t i = 0; i < r.placements.size(); ++i) {
      EXPECT_TRUE(r.placements[i].bbox.inside(p.width, p.height));
      EXPECT_EQ(r.placements[i].label, std::string(1, static_cast<char>('a' + i)));
      for (std::size_t j = i + 1; j < r.placements.size(); ++j)
        ASSERT_FALSE(r.placements[i].bbox.intersects(r.placements[j].bbox)) << r.trial_id;
    }
  }
}

TEST(Location, TargetInItsCellAndDistractorsInOtherCells) {
  const auto recs = build_suite(small(SuiteKind::kLocation, "blip2", 1));
  const auto grid = merged_grid(find_profile("blip2"), 2);
  for (const auto& r : recs) {
    const int k = r.params.at("distractors").get<int>();
    ASSERT_EQ(static_cast<int>(r.placements.size()), k + 1);
    const Rect cell = grid.cell(r.params.at("row").get<int>(), r.params.at("col").get<int>());
    EXPECT_TRUE(cell.contains(r.placements[0].bbox));
    std::set<int> cells;
    for (const auto& pl : r.placements) cells.insert(grid.patch_index(pl.bbox.x, pl.bbox.y));
    EXPECT_EQ(cells.size(), r.placements.size());
    EXPECT_EQ(r.placements[0].rate, 8);
  }
}

TEST(BoundaryCut, RangeEndsAndCutRuns) {
  for (const char* name : {"blip2", "fuyu-8b"}) {
    const auto& p = find_profile(name);
    auto spec = small(SuiteKind::kBoundaryCut, name, 1);
    EXPECT_EQ(spec.digit_tiers, std::vector<int>{p.patch == 14 ? 3 : 6});
    const auto recs = build_suite(spec);
    std::map<std::string, std::vector<const TrialRecord*>> by_axis;
    for (const auto& r : recs) by_axis[r.params.at("axis").get<std::string>()].push_back(&r);
    ASSERT_EQ(by_axis.size(), 2u);
    for (auto& [axis, rs] : by_axis) {
      std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->params.at("offset") < b->params.at("offset"); });
      EXPECT_DOUBLE_EQ(rs.front()->params.at("range_ratio").get<double>(), 0.0);
      EXPECT_DOUBLE_EQ(rs.back()->params.at("range_ratio").get<double>(), 1.0);
      bool any_uncut = false;
      for (const auto* r : rs) {
        const Rect& b = r->placements[0].bbox;
        const bool vertical = axis == "vertical";
        const auto want = oracle::crossed(vertical ? b.x : b.y, vertical ? b.w : b.h, p.patch);
        EXPECT_EQ(r->params.at("is_cut").get<bool>(), !want.empty());
        EXPECT_EQ(r->params.at("crossed").get<std::vector<int>>(), want);
        any_uncut = any_uncut || want.empty();
      }
      EXPECT_TRUE(any_uncut) << name << " " << axis;
    }
  }
}

TEST(Spec, ValidationErrors) {
  auto s = small(SuiteKind::kQuality);
  s.param_grid = {21};
  EXPECT_THROW(build_suite(s), Error);
  s = small(SuiteKind::kDistractor);
  s.param_grid = {10};
  EXPECT_THROW(build_suite(s), Error);
  s = small(SuiteKind::kSize);
  s.param_grid = {0.5};
  EXPECT_THROW(build_suite(s), Error);
  s = small(SuiteKind::kQuality);
  s.trials_per_cell = 0;
  EXPECT_THROW(build_suite(s), Error);
  s = small(SuiteKind::kQuality);
  EXPECT_THROW(build_size_suite(s), Error);
}

TEST(Manifest, RoundTrip) {
  const auto recs = build_suite(small(SuiteKind::kBoundaryCut));
  for (const auto& r : recs) ASSERT_EQ(trial_from_json(to_json(r)), r);
  const auto path = std::filesystem::temp_directory_path() / "vprobe_manifest_test.jsonl";
  write_manifest(path, recs);
  auto back = read_manifest(path);
  auto sorted = recs;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.trial_id < b.trial_id; });
  EXPECT_EQ(back, sorted);
  std::filesystem::remove(path);
}

}  // namespace
