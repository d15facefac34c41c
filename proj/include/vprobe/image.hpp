#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vprobe {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned pixel rectangle, closed-open: [x, x+w) x [y, y+h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  long long area() const { return static_cast<long long>(w) * h; }
  bool empty() const { return w <= 0 || h <= 0; }

  bool inside(int width, int height) const {
    return x >= 0 && y >= 0 && w >= 0 && h >= 0 && right() <= width && bottom() <= height;
  }
  bool contains(const Rect& o) const {
    return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
  }
  bool intersects(const Rect& o) const {
    return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
  }
  Rect padded(int margin) const {
    return {x - margin, y - margin, w + 2 * margin, h + 2 * margin};
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

// Exact positive rational used for non-integer scale factors (e.g. 5.5 = 11/2),
// so nearest-neighbour index maps stay in integer arithmetic.
struct Ratio {
  long long num = 1;
  long long den = 1;

  static Ratio from_decimal(double value, long long max_den = 1000);
  bool is_integer() const { return den == 1; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

// 8-bit single-channel raster, row-major. 255 = white background, 0 = ink.
class GrayImage {
 public:
  static constexpr std::uint8_t kWhite = 255;
  static constexpr std::uint8_t kBlack = 0;

  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = kWhite);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

  std::span<const std::uint8_t> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<std::uint8_t> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  std::span<const std::uint8_t> pixels() const { return data_; }
  std::span<std::uint8_t> pixels() { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace vprobe
