// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "vprobe/simd/kernels.hpp"

namespace vprobe::simd {
namespace {

const KernelTable& scalar() { return scalar_kernels(); }

void accumulate_u8(const std::uint8_t* src, std::uint32_t* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i bytes = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(src + i));
    const __m256i widened = _mm256_cvtepu8_epi32(bytes);
    __m256i sum = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(acc + i));
    sum = _mm256_add_epi32(sum, widened);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(acc + i), sum);
  }
  scalar().accumulate_u8(src + i, acc + i, n - i);
}

void replicate_u8(const std::uint8_t* src, std::size_t n, int factor, std::uint8_t* dst) {
  if (factor != 2) {
    scalar().replicate_u8(src, n, factor, dst);
    return;
  }
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
    // unpack works per 128-bit lane; fix the lane order with a permute.
    const __m256i lo = _mm256_unpacklo_epi8(v, v);
    const __m256i hi = _mm256_unpackhi_epi8(v, v);
    const __m256i first = _mm256_permute2x128_si256(lo, hi, 0x20);
    const __m256i second = _mm256_permute2x128_si256(lo, hi, 0x31);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + 2 * i), first);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + 2 * i + 32), second);
  }
  scalar().replicate_u8(src + i, n - i, factor, dst + 2 * i);
}

// Mask of lanes where src < threshold, as 0xFF / 0x00 bytes.
inline __m256i below_mask(__m256i v, __m256i threshold) {
  const __m256i diff = _mm256_subs_epu8(threshold, v);
  return _mm256_xor_si256(_mm256_cmpeq_epi8(diff, _mm256_setzero_si256()),
                          _mm256_set1_epi8(static_cast<char>(0xFF)));
}

std::size_t count_below(const std::uint8_t* src, std::size_t n, std::uint8_t threshold) {
  const __m256i t = _mm256_set1_epi8(static_cast<char>(threshold));
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
    const unsigned mask = static_cast<unsigned>(_mm256_movemask_epi8(below_mask(v, t)));
    count += static_cast<std::size_t>(__builtin_popcount(mask));
  }
  return count + scalar().count_below(src + i, n - i, threshold);
}

void threshold_below(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                     std::uint8_t* dst) {
  const __m256i t = _mm256_set1_epi8(static_cast<char>(threshold));
  const __m256i one = _mm256_set1_epi8(1);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i),
                        _mm256_and_si256(below_mask(v, t), one));
  }
  scalar().threshold_below(src + i, n - i, threshold, dst + i);
}

std::size_t count_mismatch(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const unsigned equal = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(va, vb)));
    count += 32 - static_cast<std::size_t>(__builtin_popcount(equal));
  }
  return count + scalar().count_mismatch(a + i, b + i, n - i);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", accumulate_u8, replicate_u8, count_below,
                                 threshold_below, count_mismatch};
  return table;
}

}  // namespace vprobe::simd
