#pragma once

// Byte-oriented inner loops used by the raster and OCR code. Each entry has a
// scalar reference implementation; AVX2 (x86-64) and NEON (aarch64) variants are
// compiled when enabled and picked at first use based on the running CPU.
// All variants must produce bit-identical results.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace vprobe::simd {

struct KernelTable {
  const char* name;

  // acc[i] += src[i] for i in [0, n).
  void (*accumulate_u8)(const std::uint8_t* src, std::uint32_t* acc, std::size_t n);

  // dst[i*factor + k] = src[i] for k in [0, factor).
  void (*replicate_u8)(const std::uint8_t* src, std::size_t n, int factor, std::uint8_t* dst);

  // Number of i with src[i] < threshold.
  std::size_t (*count_below)(const std::uint8_t* src, std::size_t n, std::uint8_t threshold);

  // dst[i] = src[i] < threshold ? 1 : 0.
  void (*threshold_below)(const std::uint8_t* src, std::size_t n, std::uint8_t threshold,
                          std::uint8_t* dst);

  // Number of i with a[i] != b[i].
  std::size_t (*count_mismatch)(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Table used by the library. Selection happens once; setting VPROBE_SIMD=scalar
// in the environment pins the scalar reference.
const KernelTable& active_kernels();

}  // namespace vprobe::simd
