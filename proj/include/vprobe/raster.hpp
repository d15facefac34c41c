#pragma once

#include <cstddef>
#include <string_view>

#include "vprobe/image.hpp"

namespace vprobe {

// Glyph cell height at a given sampling rate is the rate itself; widths and
// spacing follow from the embedded glyph table.
int letter_spacing(int sampling_rate);
int scaled_advance(char c, int sampling_rate);

// Size of the layout box render_text would produce, positioned at the origin.
// `spacing` overrides the gap between glyphs; 0 means letter_spacing(rate).
Rect measure_text(std::string_view text, int sampling_rate, int spacing = 0);

// Composites black glyphs onto the canvas with nearest-neighbour scaling from
// the reference height. Returns the layout box (height == sampling_rate).
Rect render_text(GrayImage& canvas, std::string_view text, int sampling_rate, Point anchor, int spacing = 0);

// Box-average by an integer factor that divides both dimensions; rounds half up.
GrayImage downsample(const GrayImage& img, int factor);

// Nearest-neighbour replication.
GrayImage upsample(const GrayImage& img, int factor);

GrayImage downsample_upsample(const GrayImage& img, int factor);

// Reduce the content sampling rate from `from_rate` to `to_rate` at constant
// size. The box filter works on the rational grid of from_rate/to_rate source
// pixels per sample (partial edge blocks are averaged over their covered area),
// and the nearest-neighbour return path maps dst -> floor(dst * to / from).
// Equals downsample_upsample when the ratio is an integer dividing both dims.
GrayImage degrade_sampling_rate(const GrayImage& img, int from_rate, int to_rate);

// Crop `rect`, then enlarge by `factor` with src = floor(dst / factor).
// The output size defaults to round(rect size * factor).
GrayImage crop_upsample(const GrayImage& img, const Rect& rect, Ratio factor);
GrayImage crop_upsample(const GrayImage& img, const Rect& rect, Ratio factor, int out_width,
                        int out_height);

// Destination interval [begin, end) of pixels that crop_upsample maps onto the
// source interval [start, start+length) measured from the crop origin.
struct Interval {
  long long begin = 0;
  long long end = 0;
};
Interval scaled_interval(long long start, long long length, Ratio factor);

std::size_t count_dark(const GrayImage& img, std::uint8_t threshold = 128);

}  // namespace vprobe
