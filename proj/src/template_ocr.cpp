#include "vprobe/template_ocr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "vprobe/glyphs.hpp"
#include "vprobe/raster.hpp"
#include "vprobe/simd/kernels.hpp"

namespace vprobe {
namespace {

constexpr std::uint8_t kInkThreshold = 128;
// Components are cut at quarter coverage so a blurred stroke that lands half on
// two pixels still joins its glyph. Clean renders are binary and unaffected.
constexpr std::uint8_t kComponentThreshold = 192;

Rect unite(const Rect& a, const Rect& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  const int x0 = std::min(a.x, b.x);
  const int y0 = std::min(a.y, b.y);
  return {x0, y0, std::max(a.right(), b.right()) - x0, std::max(a.bottom(), b.bottom()) - y0};
}

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

struct Components {
  std::vector<int> labels;  // -1 = background
  std::vector<Rect> boxes;
};

Components label_components(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  std::vector<std::uint8_t> ink(img.size());
  simd::active_kernels().threshold_below(img.pixels().data(), img.size(), kComponentThreshold, ink.data());

  Components out;
  out.labels.assign(img.size(), -1);
  std::vector<std::size_t> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * w + x;
      if (!ink[start] || out.labels[start] >= 0) continue;
      const int id = static_cast<int>(out.boxes.size());
      Rect box{x, y, 1, 1};
      queue.assign(1, start);
      out.labels[start] = id;
      for (std::size_t q = 0; q < queue.size(); ++q) {
        const int cx = static_cast<int>(queue[q] % w);
        const int cy = static_cast<int>(queue[q] / w);
        box = unite(box, Rect{cx, cy, 1, 1});
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
            if (ink[n] && out.labels[n] < 0) {
              out.labels[n] = id;
              queue.push_back(n);
            }
          }
        }
      }
      out.boxes.push_back(box);
    }
  }
  return out;
}

struct WordRegion {
  std::vector<int> members;
  Rect box;
};

// Horizontal gap two pieces of one word can have at text height h: the letter
// spacing plus a quarter advance for glyphs whose edge column is blank.
int max_word_gap(int h) { return letter_spacing(h) + (scaled_advance('0', h) + 3) / 4; }

bool x_overlaps(const Rect& a, const Rect& b) { return a.x < b.right() && b.x < a.right(); }

int vertical_gap(const Rect& a, const Rect& b) { return std::max(a.y, b.y) - std::min(a.bottom(), b.bottom()); }

// Pieces of one glyph are joined first: the two flat bars of '=' pair up, and
// each dot joins the nearest stem below or above it. Only then are glyphs
// chained into words, so a dotted letter's gap is judged at full height.
std::vector<WordRegion> group_words(const Components& comps) {
  const std::size_t n = comps.boxes.size();
  const auto& box = comps.boxes;
  DisjointSet sets(n);
  const auto flat = [&](std::size_t i) { return box[i].w >= 2 * box[i].h; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (flat(i) && flat(j) && std::abs(box[i].x - box[j].x) <= 1 && std::abs(box[i].w - box[j].w) <= 1 &&
          vertical_gap(box[i], box[j]) <= 2 * std::max(box[i].h, box[j].h) + 1) {
        sets.unite(i, j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (flat(i)) continue;
    std::size_t nearest = n;
    int nearest_gap = std::numeric_limits<int>::max();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || 3 * box[i].h > box[j].h || !x_overlaps(box[i], box[j])) continue;
      const int gap = vertical_gap(box[i], box[j]);
      if (gap >= 0 && 2 * gap <= box[j].h && gap < nearest_gap) {
        nearest = j;
        nearest_gap = gap;
      }
    }
    if (nearest < n) sets.unite(i, nearest);
  }

  std::vector<WordRegion> glyphs(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& g = glyphs[sets.find(i)];
    g.members.push_back(static_cast<int>(i));
    g.box = unite(g.box, box[i]);
  }
  std::erase_if(glyphs, [](const WordRegion& g) { return g.members.empty(); });

  // Chaining uses the tallest piece met so far, so short letters next to a
  // digit get the digit's word gap. Repeats until no word grows.
  std::vector<WordRegion> words = std::move(glyphs);
  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t i = 0; i < words.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < words.size() && !merged; ++j) {
        const Rect& a = words[i].box;
        const Rect& b = words[j].box;
        const int overlap = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
        if (overlap <= 0 || 2 * overlap < std::min(a.h, b.h)) continue;
        const int gap = std::max(a.x, b.x) - std::min(a.right(), b.right());
        if (gap > max_word_gap(std::max(a.h, b.h))) continue;
        words[i].members.insert(words[i].members.end(), words[j].members.begin(), words[j].members.end());
        words[i].box = unite(a, b);
        words.erase(words.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
      }
    }
  }
  std::sort(words.begin(), words.end(), [](const WordRegion& a, const WordRegion& b) {
    return a.box.y != b.box.y ? a.box.y < b.box.y : a.box.x < b.box.x;
  });
  return words;
}

// Clean renders are pure black on white; resampled ones carry grey levels.
bool has_grey(const GrayImage& img, const Rect& box) {
  for (int y = box.y; y < box.bottom(); ++y) {
    for (int x = box.x; x < box.right(); ++x) {
      const std::uint8_t v = img.at(x, y);
      if (v > 8 && v < 247) return true;
    }
  }
  return false;
}

// Ink offsets of every glyph rendered at one sampling rate.
struct PitchedTemplates {
  int rate = 0;
  int advance = 0;
  int pitch = 0;
  std::vector<std::vector<std::pair<int, int>>> ink;  // per character: (dy, dx)
  std::vector<std::vector<std::uint8_t>> mask;         // per character: rate x advance
  std::vector<int> ink_x0;                             // per character: first inked column
};

const PitchedTemplates& pitched_templates(int rate) {
  static std::mutex mutex;
  static std::map<int, PitchedTemplates> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(rate);
  if (it != cache.end()) return it->second;
  PitchedTemplates t;
  t.rate = rate;
  t.advance = scaled_advance('0', rate);
  t.pitch = t.advance + letter_spacing(rate);
  for (char c : GlyphSet::kCharacters) {
    GrayImage cell(t.advance, rate);
    render_text(cell, std::string(1, c), rate, {0, 0});
    std::vector<std::pair<int, int>> offsets;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(rate * t.advance), 0);
    int x0 = t.advance;
    for (int y = 0; y < rate; ++y) {
      for (int x = 0; x < t.advance; ++x) {
        if (cell.at(x, y) < kInkThreshold) {
          offsets.emplace_back(y, x);
          mask[static_cast<std::size_t>(y * t.advance + x)] = 1;
          x0 = std::min(x0, x);
        }
      }
    }
    t.ink.push_back(std::move(offsets));
    t.mask.push_back(std::move(mask));
    t.ink_x0.push_back(x0);
  }
  return cache.emplace(rate, std::move(t)).first->second;
}

struct Candidate {
  std::vector<int> members;
  Rect bbox;
};

// Compares the candidate's pixels with every glyph rendered at the word's
// height, left ink edges aligned. Distance is mismatches over the union of
// both ink sets, so a clean render of the right glyph scores 0.
OcrGlyph classify(const Candidate& cand, int line_top, int line_height, const Components& comps,
                  int image_width) {
  const PitchedTemplates& t = pitched_templates(line_height);
  const auto mine = [&](int x, int y) {
    if (x < 0 || x >= image_width || y < 0 || x < cand.bbox.x || x >= cand.bbox.right() || y < cand.bbox.y ||
        y >= cand.bbox.bottom()) {
      return false;
    }
    const int label = comps.labels[static_cast<std::size_t>(y) * image_width + x];
    return label >= 0 && std::find(cand.members.begin(), cand.members.end(), label) != cand.members.end();
  };
  std::vector<std::uint8_t> sample;
  int own = 0;
  for (int y = cand.bbox.y; y < cand.bbox.bottom(); ++y)
    for (int x = cand.bbox.x; x < cand.bbox.right(); ++x) own += mine(x, y);

  const auto& k = simd::active_kernels();
  OcrGlyph best;
  best.bbox = cand.bbox;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < t.mask.size(); ++g) {
    const int ox = cand.bbox.x - t.ink_x0[g];
    sample.assign(t.mask[g].size(), 0);
    int inside = 0;
    for (int y = 0; y < t.rate; ++y) {
      for (int x = 0; x < t.advance; ++x) {
        const bool on = mine(ox + x, line_top + y);
        sample[static_cast<std::size_t>(y * t.advance + x)] = on;
        inside += on;
      }
    }
    const std::size_t in_cell = k.count_mismatch(sample.data(), t.mask[g].data(), sample.size());
    const std::size_t miss = in_cell + static_cast<std::size_t>(own - inside);
    const std::size_t ink = t.ink[g].size();
    const std::size_t matched = (ink + static_cast<std::size_t>(inside) - in_cell) / 2;
    const std::size_t union_size = ink + static_cast<std::size_t>(own) - matched;
    const double d = union_size ? static_cast<double>(miss) / static_cast<double>(union_size) : 1.0;
    if (d < best.distance) {
      best.distance = d;
      best.character = GlyphSet::kCharacters[g];
    }
  }
  return best;
}

std::vector<OcrGlyph> read_components(const WordRegion& word, const Components& comps, int image_width) {
  std::vector<int> members = word.members;
  std::sort(members.begin(), members.end(), [&](int a, int b) {
    return comps.boxes[static_cast<std::size_t>(a)].x < comps.boxes[static_cast<std::size_t>(b)].x;
  });
  std::vector<Candidate> cands;
  for (int m : members) {
    const Rect& box = comps.boxes[static_cast<std::size_t>(m)];
    if (!cands.empty() && box.x < cands.back().bbox.right()) {
      cands.back().members.push_back(m);
      cands.back().bbox = unite(cands.back().bbox, box);
    } else {
      cands.push_back({{m}, box});
    }
  }
  std::vector<OcrGlyph> out;
  for (const auto& c : cands) out.push_back(classify(c, word.box.y, word.box.h, comps, image_width));
  return out;
}

// Reads a blurred word by fitting the monospace layout directly: for each
// plausible text height, band position and cell phase, every cell takes the
// glyph (or blank) that best explains its grey levels, and the layout with
// the smallest total absolute error wins. Cost of drawing glyph t over a cell
// is sum over t's ink of (255 - 2 * ink), so blank costs 0.
std::vector<OcrGlyph> read_pitched(const GrayImage& img, const Rect& box) {
  const auto ink_at = [&](int x, int y) -> int {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return 0;
    return 255 - img.at(x, y);
  };
  struct Best {
    long long cost = std::numeric_limits<long long>::max();
    int rate = 0;
    int top = 0;
    int start = 0;
  } best;

  // Blur moves the visible extent by up to about one source block either way.
  constexpr int kSlack = 3;
  const int r_lo = std::max(4, box.h - 2 * kSlack);
  const int r_hi = box.h + kSlack;
  for (int r = r_lo; r <= r_hi; ++r) {
    const PitchedTemplates& t = pitched_templates(r);
    for (int top = box.y - kSlack; top <= box.y + kSlack; ++top) {
      if (top + r < box.bottom() - kSlack || top + r > box.bottom() + kSlack) continue;
      for (int s = box.x - t.advance / 2 - 1; s <= box.x + kSlack; ++s) {
        long long total = 0;
        for (int x0 = s; x0 < box.right(); x0 += t.pitch) {
          long long cell_best = 0;  // blank
          for (const auto& offsets : t.ink) {
            long long c = 0;
            for (const auto& [dy, dx] : offsets) c += 255 - 2 * ink_at(x0 + dx, top + dy);
            cell_best = std::min(cell_best, c);
          }
          total += cell_best;
        }
        if (total < best.cost) best = {total, r, top, s};
      }
    }
  }
  std::vector<OcrGlyph> out;
  if (best.rate == 0) return out;
  const PitchedTemplates& t = pitched_templates(best.rate);
  for (int x0 = best.start; x0 < box.right(); x0 += t.pitch) {
    OcrGlyph g;
    g.character = ' ';
    g.bbox = {x0, best.top, t.advance, best.rate};
    long long cell_best = 0;
    for (std::size_t k = 0; k < t.ink.size(); ++k) {
      long long c = 0;
      for (const auto& [dy, dx] : t.ink[k]) c += 255 - 2 * ink_at(x0 + dx, best.top + dy);
      if (c < cell_best) {
        cell_best = c;
        g.character = GlyphSet::kCharacters[k];
        g.distance = static_cast<double>(c + static_cast<long long>(t.ink[k].size()) * 255) /
                     (2.0 * 255.0 * static_cast<double>(t.ink[k].size()));
      }
    }
    out.push_back(g);
  }
  return out;
}

struct Word {
  std::vector<OcrGlyph> glyphs;
  Rect box;
};

std::vector<Word> read_words(const GrayImage& img) {
  const Components comps = label_components(img);
  std::vector<Word> out;
  for (const WordRegion& region : group_words(comps)) {
    Word w;
    w.box = region.box;
    Rect probe = region.box.padded(1);
    if (!probe.inside(img.width(), img.height())) probe = region.box;
    w.glyphs = has_grey(img, probe) ? read_pitched(img, region.box) : read_components(region, comps, img.width());
    out.push_back(std::move(w));
  }
  return out;
}

bool is_letter(char c) { return c >= 'a' && c <= 'j'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<OcrGlyph> recognize_glyphs(const GrayImage& img) {
  std::vector<OcrGlyph> out;
  for (const Word& w : read_words(img)) {
    for (const OcrGlyph& g : w.glyphs) {
      if (g.character != ' ') out.push_back(g);
    }
  }
  return out;
}

std::vector<OcrWord> template_ocr(const GrayImage& img) {
  std::vector<OcrWord> words;
  for (const Word& word : read_words(img)) {
    const auto& g = word.glyphs;
    OcrWord current;
    bool open = false;
    auto flush = [&] {
      if (open && (!current.digits.empty() || !current.label.empty())) words.push_back(current);
      current = OcrWord{};
      open = false;
    };
    for (std::size_t i = 0; i < g.size(); ++i) {
      const char c = g[i].character;
      if (is_letter(c) && i + 1 < g.size() && g[i + 1].character == '=') {
        flush();
        current.label = std::string(1, c);
        current.bbox = unite(g[i].bbox, g[i + 1].bbox);
        open = true;
        ++i;
        continue;
      }
      if (!is_digit(c)) {
        // a blank cell or stray letter ends the number
        if (open && !current.digits.empty()) flush();
        continue;
      }
      if (!open) {
        open = true;
        current.bbox = g[i].bbox;
      }
      current.digits.push_back(c);
      current.bbox = unite(current.bbox, g[i].bbox);
    }
    flush();
  }
  return words;
}

std::string answer_for_prompt(const std::vector<OcrWord>& words, std::string_view prompt) {
  if (words.empty()) return "";
  if (prompt.find("variable") != std::string_view::npos) {
    for (const auto& w : words) {
      if (w.label == "a") return w.digits;
    }
  }
  for (const auto& w : words) {
    if (!w.digits.empty()) return w.digits;
  }
  return "";
}

}  // namespace vprobe
