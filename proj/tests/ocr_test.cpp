#include <gtest/gtest.h>

#include <map>

#include "vprobe/adapters.hpp"
#include "vprobe/metrics.hpp"
#include "vprobe/probeforge.hpp"
#include "vprobe/raster.hpp"
#include "vprobe/rng.hpp"
#include "vprobe/template_ocr.hpp"

namespace {

using namespace vprobe;

TEST(Ocr, CleanSevenDigitsAtRateTwenty) {
  GrayImage canvas(224, 224);
  render_text(canvas, "5934549", 20, {20, 100});
  const auto words = template_ocr(canvas);
  ASSERT_EQ(words.size(), 1u);
  EXPECT_EQ(words[0].digits, "5934549");
  EXPECT_EQ(words[0].label, "");
}

TEST(Ocr, LabelledWordAtRateTwelve) {
  GrayImage canvas(224, 224);
  const Rect box = render_text(canvas, "a=593", 12, {60, 50});
  const auto words = template_ocr(canvas);
  ASSERT_EQ(words.size(), 1u);
  EXPECT_EQ(words[0].label, "a");
  EXPECT_EQ(words[0].digits, "593");
  EXPECT_EQ(words[0].bbox, box);
}

TEST(Ocr, BlankImage) {
  EXPECT_TRUE(template_ocr(GrayImage(64, 64)).empty());
  EXPECT_TRUE(recognize_glyphs(GrayImage(64, 64)).empty());
}

TEST(Ocr, EveryGlyphAcrossRatesAndSpacings) {
  for (int rate = 8; rate <= 32; ++rate) {
    for (int spacing : {0, 1}) {
      GrayImage canvas(400, 60);
      render_text(canvas, "0123456789", rate, {5, 5}, spacing);
      const auto words = template_ocr(canvas);
      ASSERT_EQ(words.size(), 1u) << rate << "/" << spacing;
      EXPECT_EQ(words[0].digits, "0123456789") << rate << "/" << spacing;
      std::string letters;
      GrayImage lc(400, 60);
      render_text(lc, "abcdefghij=", rate, {5, 5}, spacing);
      for (const auto& g : recognize_glyphs(lc)) letters += g.character;
      EXPECT_EQ(letters, "abcdefghij=") << rate << "/" << spacing;
    }
  }
}

TEST(Ocr, ReadsEveryDistractorLabel) {
  auto spec = default_suite_spec(SuiteKind::kDistractor, find_profile("llava-1.5"), 5);
  spec.trials_per_cell = 2;
  spec.reps = 1;
  spec.param_grid = {9};
  const auto& p = find_profile("llava-1.5");
  for (const auto& r : build_suite(spec)) {
    std::map<std::string, std::string> want, got;
    for (const auto& pl : r.placements) want[pl.label] = pl.text.substr(2);
    for (const auto& w : template_ocr(render_trial(r, p))) got[w.label] = w.digits;
    EXPECT_EQ(got, want) << r.trial_id;
  }
}

TEST(Ocr, AnswerForPrompt) {
  const std::vector<OcrWord> words = {{"b", "111", {}}, {"a", "222", {}}, {"", "333", {}}};
  EXPECT_EQ(answer_for_prompt(words, kVariablePrompt), "222");
  EXPECT_EQ(answer_for_prompt(words, kNumberPrompt), "111");
  EXPECT_EQ(answer_for_prompt({}, kNumberPrompt), "");
}

TEST(Ocr, DegradedStimuliScoreLower) {
  auto spec = default_suite_spec(SuiteKind::kQuality, find_profile("blip2"), 21);
  spec.trials_per_cell = 20;
  spec.digit_tiers = {3};
  spec.param_grid = {2, 8, 20};
  const auto& p = find_profile("blip2");
  std::map<int, double> sum;
  std::map<int, int> n;
  TemplateOcrBackend ocr;
  for (const auto& r : build_suite(spec)) {
    Query q{r.prompt, render_trial(r, p), {}, &r};
    const Reply reply = ocr.ask(q);
    ASSERT_TRUE(reply.ok());
    const int rate = r.params.at("sampling_rate").get<int>();
    sum[rate] += score_reply(reply.text, r.ground_truth).gpm;
    ++n[rate];
  }
  EXPECT_GT(sum[20] / n[20], sum[2] / n[2]);
  EXPECT_EQ(sum[20], n[20]);
  EXPECT_EQ(sum[8], n[8]);
}

}  // namespace
