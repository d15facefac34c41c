#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "vprobe/error.hpp"
#include "vprobe/rng.hpp"

namespace {

using namespace vprobe;

TEST(Rng, KnownValues) {
  // SplitMix64 reference output for state 0 after one golden-ratio step.
  EXPECT_EQ(mix64(0x9E3779B97F4A7C15ULL), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(hex64(255), "00000000000000ff");
  EXPECT_EQ(stable_hash("abc"), stable_hash("abc"));
  EXPECT_NE(stable_hash("abc"), stable_hash("abd"));
}

TEST(Rng, DeriveSeedSeparatesLabelBoundaries) {
  EXPECT_NE(derive_seed(1, {"ab", "c"}), derive_seed(1, {"a", "bc"}));
  EXPECT_NE(derive_seed(1, {"a"}), derive_seed(2, {"a"}));
  EXPECT_EQ(derive_seed(7, {"x", "y"}), derive_seed(7, {"x", "y"}));
}

TEST(Rng, CounterStreamsAreReproducible) {
  CounterRng a(99), b(99);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
  EXPECT_EQ(a.counter(), 100u);
}

TEST(Rng, UniformBoundsAndUnit) {
  CounterRng r(5);
  for (int i = 0; i < 10000; ++i) {
    const auto v = r.uniform(3, 9);
    ASSERT_GE(v, 3u);
    ASSERT_LE(v, 9u);
    const double u = r.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_EQ(r.uniform(4, 4), 4u);
  EXPECT_THROW((void)r.uniform(5, 4), Error);
  (void)r.uniform(0, ~0ULL);
}

TEST(DrawNumber, Examples) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const std::string one = draw_number(s, 1);
    ASSERT_EQ(one.size(), 1u);
    ASSERT_GE(one[0], '1');
    ASSERT_LE(one[0], '9');
    const std::string seven = draw_number(s, 7);
    ASSERT_EQ(seven.size(), 7u);
    ASSERT_NE(seven[0], '0');
  }
  EXPECT_EQ(draw_number(123, 5), draw_number(123, 5));
  EXPECT_EQ(draw_number(1, 18).size(), 18u);
  EXPECT_THROW((void)draw_number(1, 0), Error);
  EXPECT_THROW((void)draw_number(1, 19), Error);
}

TEST(DrawNumber, ThreeDigitValuesAreUniform) {
  constexpr int kDraws = 1'000'000;
  std::vector<int> counts(1000, 0);
  for (int i = 0; i < kDraws; ++i) {
    ++counts[static_cast<std::size_t>(std::stoi(draw_number(derive_seed(2024, {std::to_string(i)}), 3)))];
  }
  const double p = 1.0 / 900.0;
  const double mean = kDraws * p;
  const double sigma = std::sqrt(kDraws * p * (1.0 - p));
  double chi2 = 0.0;
  for (int v = 0; v < 1000; ++v) {
    if (v < 100) {
      ASSERT_EQ(counts[static_cast<std::size_t>(v)], 0) << v;
      continue;
    }
    const double c = counts[static_cast<std::size_t>(v)];
    ASSERT_LT(std::fabs(c - mean), 5.0 * sigma) << v;
    chi2 += (c - mean) * (c - mean) / mean;
  }
  // 899 degrees of freedom: mean 899, sd ~42.4; 6 sd either side.
  EXPECT_GT(chi2, 899.0 - 6 * 42.4);
  EXPECT_LT(chi2, 899.0 + 6 * 42.4);
}

}  // namespace
