#include <arm_neon.h>

#include "vprobe/simd/kernels.hpp"

namespace vprobe::simd {
namespace {

const KernelTable& scalar() { return scalar_kernels(); }

void accumulate_u8(const std::uint8_t* src, std::uint32_t* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const uint16x8_t wide = vmovl_u8(vld1_u8(src + i));
    vst1q_u32(acc + i, vaddw_u16(vld1q_u32(acc + i), vget_low_u16(wide)));
    vst1q_u32(acc + i + 4, vaddw_u16(vld1q_u32(acc + i + 4), vget_high_u16(wide)));
  }
  scalar().accumulate_u8(src + i, acc + i, n - i);
}

void replicate_u8(const std::uint8_t* src, std::size_t n, int factor, std::uint8_t* dst) {
  if (factor != 2) {
    scalar().replicate_u8(src, n, factor, dst);
    return;
  }
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t v = vld1q_u8(src + i);
    uint8x16x2_t pair{{v, v}};
    vst2q_u8(dst + 2 * i, pair);
  }
  scalar().replicate_u8(src + i, n - i, factor, dst + 2 * i);
}

std::size_t count_below(const std::uint8_t* src, std::size_t n, std::uint8_t threshold) {
  const uint8x16_t t = vdupq_n_u8(threshold);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t below = vshrq_n_u8(vcltq_u8(vld1q_u8(src + i), t), 7);
    count += vaddvq_u8(below);
  }
  return count + scalar().count_below(src + i, n - i, threshold);
}

void threshold_below(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                     std::uint8_t* dst) {
  const uint8x16_t t = vdupq_n_u8(threshold);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    vst1q_u8(dst + i, vshrq_n_u8(vcltq_u8(vld1q_u8(src + i), t), 7));
  }
  scalar().threshold_below(src + i, n - i, threshold, dst + i);
}

std::size_t count_mismatch(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t equal = vceqq_u8(vld1q_u8(a + i), vld1q_u8(b + i));
    count += 16 - vaddvq_u8(vshrq_n_u8(equal, 7));
  }
  return count + scalar().count_mismatch(a + i, b + i, n - i);
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{"neon", accumulate_u8, replicate_u8, count_below,
                                 threshold_below, count_mismatch};
  return table;
}

}  // namespace vprobe::simd
