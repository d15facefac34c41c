#include "vprobe/raster.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "vprobe/error.hpp"
#include "vprobe/glyphs.hpp"
#include "vprobe/simd/kernels.hpp"

namespace vprobe {
namespace {

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long long ceil_div(long long a, long long b) { return -floor_div(-a, b); }

// Rounds num/den (both non-negative) half away from zero.
std::uint8_t rounded_mean(std::uint64_t num, std::uint64_t den) {
  return static_cast<std::uint8_t>((2 * num + den) / (2 * den));
}

void require_positive_factor(int factor) {
  if (factor < 1) {
    throw Error(ErrorCode::kInvalidArgument, "factor must be >= 1, got " + std::to_string(factor));
  }
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be >= 1");
  }
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1 ||
      data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer does not match image dimensions");
  }
}

Ratio Ratio::from_decimal(double value, long long max_den) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::kInvalidArgument, "scale factor must be positive");
  }
  for (long long den = 1; den <= max_den; ++den) {
    const double scaled = value * static_cast<double>(den);
    const double nearest = std::round(scaled);
    if (std::fabs(scaled - nearest) < 1e-9 * static_cast<double>(den)) {
      const long long num = static_cast<long long>(nearest);
      const long long g = std::gcd(num, den);
      return {num / g, den / g};
    }
  }
  throw Error(ErrorCode::kInvalidArgument,
              "scale factor " + std::to_string(value) + " is not a simple fraction");
}

// A quarter of the cell height (half an advance). At the quality render rate
// of 20 this makes the pitch 15 px, a whole number of 2.5 px blocks, so every
// glyph meets the rate-8 block grid at the same phase.
int letter_spacing(int sampling_rate) { return std::max(1, sampling_rate / 4); }

int scaled_advance(char c, int sampling_rate) {
  const int advance = GlyphSet::builtin().advance(c);
  // round(advance * rate / H_ref), half up
  return (2 * advance * sampling_rate + GlyphSet::kRefHeight) / (2 * GlyphSet::kRefHeight);
}

namespace {

int gap_for(int sampling_rate, int spacing) {
  if (spacing < 0) throw Error(ErrorCode::kInvalidArgument, "spacing must be >= 0");
  return spacing == 0 ? letter_spacing(sampling_rate) : spacing;
}

}  // namespace

Rect measure_text(std::string_view text, int sampling_rate, int spacing) {
  if (sampling_rate < 1) {
    throw Error(ErrorCode::kInvalidArgument, "sampling rate must be >= 1");
  }
  const int gap = gap_for(sampling_rate, spacing);
  int width = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    width += scaled_advance(text[i], sampling_rate);
    if (i + 1 < text.size()) width += gap;
  }
  return {0, 0, width, sampling_rate};
}

Rect render_text(GrayImage& canvas, std::string_view text, int sampling_rate, Point anchor, int spacing) {
  Rect box = measure_text(text, sampling_rate, spacing);
  const int gap = gap_for(sampling_rate, spacing);
  box.x = anchor.x;
  box.y = anchor.y;
  if (text.empty()) return {anchor.x, anchor.y, 0, sampling_rate};
  if (!box.inside(canvas.width(), canvas.height())) {
    throw Error(ErrorCode::kOutOfBounds, "text '" + std::string(text) + "' does not fit in canvas");
  }

  const GlyphSet& glyphs = GlyphSet::builtin();
  const int rate = sampling_rate;
  int pen = anchor.x;
  for (char c : text) {
    const int adv = scaled_advance(c, rate);
    for (int dy = 0; dy < rate; ++dy) {
      // sample at pixel centres: floor((dy + 0.5) * H_ref / rate)
      const int src_row = ((2 * dy + 1) * GlyphSet::kRefHeight) / (2 * rate);
      auto dst = canvas.row(anchor.y + dy);
      for (int dx = 0; dx < adv; ++dx) {
        const int src_col = ((2 * dx + 1) * GlyphSet::kRefAdvance) / (2 * adv);
        if (glyphs.bit(c, src_row, src_col)) dst[static_cast<std::size_t>(pen + dx)] = GrayImage::kBlack;
      }
    }
    pen += adv + gap;
  }
  return box;
}

GrayImage downsample(const GrayImage& img, int factor) {
  require_positive_factor(factor);
  if (img.width() % factor != 0 || img.height() % factor != 0) {
    throw Error(ErrorCode::kNonDivisibleFactor,
                "factor " + std::to_string(factor) + " does not divide " +
                    std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  const auto& k = simd::active_kernels();
  const int out_w = img.width() / factor;
  const int out_h = img.height() / factor;
  const auto area = static_cast<std::uint64_t>(factor) * static_cast<std::uint64_t>(factor);
  GrayImage out(out_w, out_h);
  std::vector<std::uint32_t> column_sums(static_cast<std::size_t>(img.width()));
  for (int oy = 0; oy < out_h; ++oy) {
    std::fill(column_sums.begin(), column_sums.end(), 0u);
    for (int dy = 0; dy < factor; ++dy) {
      k.accumulate_u8(img.row(oy * factor + dy).data(), column_sums.data(), column_sums.size());
    }
    auto dst = out.row(oy);
    for (int ox = 0; ox < out_w; ++ox) {
      std::uint64_t sum = 0;
      for (int dx = 0; dx < factor; ++dx) sum += column_sums[static_cast<std::size_t>(ox * factor + dx)];
      dst[static_cast<std::size_t>(ox)] = rounded_mean(sum, area);
    }
  }
  return out;
}

GrayImage upsample(const GrayImage& img, int factor) {
  require_positive_factor(factor);
  const auto& k = simd::active_kernels();
  GrayImage out(img.width() * factor, img.height() * factor);
  for (int y = 0; y < img.height(); ++y) {
    auto first = out.row(y * factor);
    k.replicate_u8(img.row(y).data(), static_cast<std::size_t>(img.width()), factor, first.data());
    for (int dy = 1; dy < factor; ++dy) {
      auto copy = out.row(y * factor + dy);
      std::copy(first.begin(), first.end(), copy.begin());
    }
  }
  return out;
}

GrayImage downsample_upsample(const GrayImage& img, int factor) {
  return upsample(downsample(img, factor), factor);
}

namespace {

struct Tap {
  int src;
  long long weight;
};

// For each coarse sample j, the source pixels overlapping [j*from, (j+1)*from)
// on a grid where source pixel i spans [i*to, (i+1)*to).
std::vector<std::vector<Tap>> box_taps(int length, long long from, long long to) {
  const long long extent = static_cast<long long>(length) * to;
  const long long samples = ceil_div(extent, from);
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(samples));
  for (long long j = 0; j < samples; ++j) {
    const long long lo = j * from;
    const long long hi = std::min(extent, lo + from);
    for (long long i = lo / to; i * to < hi; ++i) {
      const long long overlap = std::min(hi, (i + 1) * to) - std::max(lo, i * to);
      if (overlap > 0) taps[static_cast<std::size_t>(j)].push_back({static_cast<int>(i), overlap});
    }
  }
  return taps;
}

}  // namespace

GrayImage degrade_sampling_rate(const GrayImage& img, int from_rate, int to_rate) {
  if (from_rate < 1 || to_rate < 1 || to_rate > from_rate) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= to_rate <= from_rate");
  }
  const long long g = std::gcd(from_rate, to_rate);
  const long long from = from_rate / g;
  const long long to = to_rate / g;
  if (from == to) return img;

  const auto taps_x = box_taps(img.width(), from, to);
  const auto taps_y = box_taps(img.height(), from, to);
  const int coarse_w = static_cast<int>(taps_x.size());
  const int coarse_h = static_cast<int>(taps_y.size());
  GrayImage coarse(coarse_w, coarse_h);
  for (int cy = 0; cy < coarse_h; ++cy) {
    const auto& ty = taps_y[static_cast<std::size_t>(cy)];
    long long wy_total = 0;
    for (const Tap& t : ty) wy_total += t.weight;
    for (int cx = 0; cx < coarse_w; ++cx) {
      const auto& tx = taps_x[static_cast<std::size_t>(cx)];
      long long wx_total = 0;
      std::uint64_t sum = 0;
      for (const Tap& t : tx) wx_total += t.weight;
      for (const Tap& a : ty) {
        auto src = img.row(a.src);
        for (const Tap& b : tx) {
          sum += static_cast<std::uint64_t>(a.weight * b.weight) * src[static_cast<std::size_t>(b.src)];
        }
      }
      coarse.at(cx, cy) = rounded_mean(sum, static_cast<std::uint64_t>(wx_total * wy_total));
    }
  }

  GrayImage out(img.width(), img.height());
  std::vector<int> map_x(static_cast<std::size_t>(img.width()));
  for (int x = 0; x < img.width(); ++x) map_x[static_cast<std::size_t>(x)] = static_cast<int>(x * to / from);
  for (int y = 0; y < img.height(); ++y) {
    auto src = coarse.row(static_cast<int>(y * to / from));
    auto dst = out.row(y);
    for (int x = 0; x < img.width(); ++x) dst[static_cast<std::size_t>(x)] = src[static_cast<std::size_t>(map_x[static_cast<std::size_t>(x)])];
  }
  return out;
}

GrayImage crop_upsample(const GrayImage& img, const Rect& rect, Ratio factor) {
  const auto out_w = (2 * rect.w * factor.num + factor.den) / (2 * factor.den);
  const auto out_h = (2 * rect.h * factor.num + factor.den) / (2 * factor.den);
  return crop_upsample(img, rect, factor, static_cast<int>(out_w), static_cast<int>(out_h));
}

GrayImage crop_upsample(const GrayImage& img, const Rect& rect, Ratio factor, int out_width,
                        int out_height) {
  if (rect.empty() || !rect.inside(img.width(), img.height())) {
    throw Error(ErrorCode::kRectOutOfBounds, "crop rectangle outside image");
  }
  if (factor.num < 1 || factor.den < 1) {
    throw Error(ErrorCode::kInvalidArgument, "scale factor must be positive");
  }
  const auto src_of = [&](long long dst) { return floor_div(dst * factor.den, factor.num); };
  if (src_of(out_width - 1) >= rect.w || src_of(out_height - 1) >= rect.h) {
    throw Error(ErrorCode::kInvalidArgument, "output size exceeds the scaled crop");
  }

  if (factor.is_integer() && out_width == rect.w * factor.num && out_height == rect.h * factor.num) {
    const auto& k = simd::active_kernels();
    const int f = static_cast<int>(factor.num);
    GrayImage out(out_width, out_height);
    for (int y = 0; y < rect.h; ++y) {
      auto first = out.row(y * f);
      k.replicate_u8(img.row(rect.y + y).data() + rect.x, static_cast<std::size_t>(rect.w), f, first.data());
      for (int dy = 1; dy < f; ++dy) {
        auto copy = out.row(y * f + dy);
        std::copy(first.begin(), first.end(), copy.begin());
      }
    }
    return out;
  }

  GrayImage out(out_width, out_height);
  std::vector<int> map_x(static_cast<std::size_t>(out_width));
  for (int x = 0; x < out_width; ++x) map_x[static_cast<std::size_t>(x)] = rect.x + static_cast<int>(src_of(x));
  for (int y = 0; y < out_height; ++y) {
    auto src = img.row(rect.y + static_cast<int>(src_of(y)));
    auto dst = out.row(y);
    for (int x = 0; x < out_width; ++x) dst[static_cast<std::size_t>(x)] = src[static_cast<std::size_t>(map_x[static_cast<std::size_t>(x)])];
  }
  return out;
}

Interval scaled_interval(long long start, long long length, Ratio factor) {
  // dst maps into [start, start+length) iff start <= dst*den/num < start+length
  return {ceil_div(start * factor.num, factor.den), ceil_div((start + length) * factor.num, factor.den)};
}

std::size_t count_dark(const GrayImage& img, std::uint8_t threshold) {
  return simd::active_kernels().count_below(img.pixels().data(), img.size(), threshold);
}

}  // namespace vprobe
