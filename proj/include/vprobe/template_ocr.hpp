#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vprobe/image.hpp"

namespace vprobe {

struct OcrGlyph {
  char character = '?';
  Rect bbox;
  double distance = 0.0;  // mismatching pixels over the union of glyph and template ink
};

struct OcrWord {
  std::string label;   // variable name before '=', empty for a bare number
  std::string digits;
  Rect bbox;
};

// 8-connected components at threshold 192. Bars and dots join their glyph,
// then glyphs chain into words by vertical overlap and horizontal gap. Binary
// words are classified per column group against glyphs rendered at the word
// height. Words with grey pixels are read by synthesis: rendered templates
// over a small search of height, top and start, lowest ink cost wins.
std::vector<OcrGlyph> recognize_glyphs(const GrayImage& img);
std::vector<OcrWord> template_ocr(const GrayImage& img);

// Picks the reply a reader would give for one of the probe prompts.
std::string answer_for_prompt(const std::vector<OcrWord>& words, std::string_view prompt);

}  // namespace vprobe
