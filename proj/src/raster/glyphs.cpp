#include "vprobe/glyphs.hpp"

#include <cassert>
#include <string>

#include "vprobe/error.hpp"

namespace vprobe {
namespace {

constexpr int kCoarseRows = 8;
constexpr int kCoarseCols = 4;
constexpr int kCell = GlyphSet::kRefHeight / kCoarseRows;

// One string per glyph, rows top to bottom, '#' = ink.
constexpr std::array<std::string_view, GlyphSet::kCharacters.size()> kCoarse = {
    // 0
    ".##."
    "#..#"
    "#..#"
    "#..#"
    "#..#"
    "#..#"
    "#..#"
    ".##.",
    // 1
    "..#."
    ".##."
    "#.#."
    "..#."
    "..#."
    "..#."
    "..#."
    "####",
    // 2
    ".##."
    "#..#"
    "...#"
    "...#"
    "..#."
    ".#.."
    "#..."
    "####",
    // 3
    "###."
    "...#"
    "...#"
    ".##."
    "...#"
    "...#"
    "...#"
    "###.",
    // 4
    "#..#"
    "#..#"
    "#..#"
    "####"
    "...#"
    "...#"
    "...#"
    "...#",
    // 5
    "####"
    "#..."
    "#..."
    "###."
    "...#"
    "...#"
    "#..#"
    ".##.",
    // 6
    ".##."
    "#..."
    "#..."
    "###."
    "#..#"
    "#..#"
    "#..#"
    ".##.",
    // 7
    "####"
    "...#"
    "...#"
    "..#."
    "..#."
    ".#.."
    ".#.."
    ".#..",
    // 8
    ".##."
    "#..#"
    "#..#"
    ".##."
    "#..#"
    "#..#"
    "#..#"
    ".##.",
    // 9
    ".##."
    "#..#"
    "#..#"
    "#..#"
    ".###"
    "...#"
    "...#"
    ".##.",
    // a
    "...."
    "...."
    ".##."
    "...#"
    ".###"
    "#..#"
    "#..#"
    ".###",
    // b
    "#..."
    "#..."
    "###."
    "#..#"
    "#..#"
    "#..#"
    "#..#"
    "###.",
    // c
    "...."
    "...."
    ".###"
    "#..."
    "#..."
    "#..."
    "#..."
    ".###",
    // d
    "...#"
    "...#"
    ".###"
    "#..#"
    "#..#"
    "#..#"
    "#..#"
    ".###",
    // e
    "...."
    "...."
    ".##."
    "#..#"
    "####"
    "#..."
    "#..."
    ".###",
    // f
    "..##"
    ".#.."
    ".#.."
    "###."
    ".#.."
    ".#.."
    ".#.."
    ".#..",
    // g
    "...."
    ".###"
    "#..#"
    "#..#"
    ".###"
    "...#"
    "...#"
    "###.",
    // h
    "#..."
    "#..."
    "###."
    "#..#"
    "#..#"
    "#..#"
    "#..#"
    "#..#",
    // i
    ".#.."
    "...."
    "##.."
    ".#.."
    ".#.."
    ".#.."
    ".#.."
    "###.",
    // j
    "..#."
    "...."
    ".##."
    "..#."
    "..#."
    "..#."
    "..#."
    "##..",
    // =
    "...."
    "...."
    "...."
    "####"
    "...."
    "####"
    "...."
    "....",
};

int slot(char c) {
  const auto pos = GlyphSet::kCharacters.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

}  // namespace

GlyphSet::GlyphSet() {
  for (std::size_t g = 0; g < kCoarse.size(); ++g) {
    assert(kCoarse[g].size() == kCoarseRows * kCoarseCols);
    for (int r = 0; r < kRefHeight; ++r) {
      for (int c = 0; c < kRefAdvance; ++c) {
        const char cell = kCoarse[g][static_cast<std::size_t>((r / kCell) * kCoarseCols + c / kCell)];
        masks_[g][static_cast<std::size_t>(r) * kRefAdvance + c] = cell == '#' ? 1 : 0;
      }
    }
  }
}

const GlyphSet& GlyphSet::builtin() {
  static const GlyphSet set;
  return set;
}

bool GlyphSet::has(char c) const { return slot(c) >= 0; }

int GlyphSet::advance(char c) const {
  if (!has(c)) throw Error(ErrorCode::kUnknownGlyph, std::string("unsupported glyph '") + c + "'");
  return kRefAdvance;
}

std::span<const std::uint8_t> GlyphSet::mask(char c) const {
  const int s = slot(c);
  if (s < 0) throw Error(ErrorCode::kUnknownGlyph, std::string("unsupported glyph '") + c + "'");
  return masks_[static_cast<std::size_t>(s)];
}

}  // namespace vprobe
