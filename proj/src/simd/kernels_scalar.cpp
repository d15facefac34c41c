#include "vprobe/simd/kernels.hpp"

#include <cstring>

namespace vprobe::simd {
namespace {

void accumulate_u8(const std::uint8_t* src, std::uint32_t* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += src[i];
}

void replicate_u8(const std::uint8_t* src, std::size_t n, int factor, std::uint8_t* dst) {
  if (factor == 1) {
    std::memcpy(dst, src, n);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::memset(dst + i * static_cast<std::size_t>(factor), src[i], static_cast<std::size_t>(factor));
  }
}

std::size_t count_below(const std::uint8_t* src, std::size_t n, std::uint8_t threshold) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += src[i] < threshold;
  return count;
}

void threshold_below(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                     std::uint8_t* dst) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] < threshold ? 1 : 0;
}

std::size_t count_mismatch(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += a[i] != b[i];
  return count;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", accumulate_u8, replicate_u8, count_below,
                                 threshold_below, count_mismatch};
  return table;
}

}  // namespace vprobe::simd
