#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace vprobe {

// Embedded monochrome glyph table. Every glyph is a binary mask of
// kRefHeight x kRefAdvance grid units; the design grid is 8 x 4 coarse cells of
// 4 x 4 units, so nearest-neighbour scaling at any rate >= 8 samples every
// coarse cell at least once.
class GlyphSet {
 public:
  static constexpr int kRefHeight = 32;
  static constexpr int kRefAdvance = 16;
  static constexpr std::string_view kCharacters = "0123456789abcdefghij=";

  static const GlyphSet& builtin();

  bool has(char c) const;
  int advance(char c) const;

  // Row-major kRefHeight x kRefAdvance mask, 1 = ink.
  std::span<const std::uint8_t> mask(char c) const;
  std::uint8_t bit(char c, int row, int col) const {
    return mask(c)[static_cast<std::size_t>(row) * kRefAdvance + col];
  }

 private:
  GlyphSet();

  using Mask = std::array<std::uint8_t, kRefHeight * kRefAdvance>;
  std::array<Mask, kCharacters.size()> masks_{};
};

}  // namespace vprobe
