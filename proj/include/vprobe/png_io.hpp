#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vprobe/image.hpp"

namespace vprobe {

enum class PngColor { kGray, kRgb };

std::vector<std::uint8_t> encode_png(const GrayImage& img, PngColor color = PngColor::kGray);

// Accepts 8-bit gray, gray+alpha, RGB and RGBA; colour inputs are reduced to
// luma (integer BT.601 weights).
GrayImage decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const GrayImage& img,
               PngColor color = PngColor::kGray);
GrayImage read_png(const std::filesystem::path& path);

}  // namespace vprobe
