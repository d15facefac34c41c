#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace vprobe {

// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

// 64-bit FNV-1a followed by mix64; stable across platforms and releases.
std::uint64_t stable_hash(std::string_view bytes);

// Derives a child seed from a parent seed and an ordered list of labels.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::string_view> parts);

std::string hex64(std::uint64_t value);

// Counter-based generator: output k is mix64(key + k * golden). Two generators
// with the same key produce the same stream on every platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next();

  // Uniform integer in [lo, hi] by rejection (no modulo bias).
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

  // Uniform double in [0, 1) with 53 random bits.
  double unit();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform n-digit number without a leading zero. n in [1, 18].
std::string draw_number(std::uint64_t seed, int n_digits);

}  // namespace vprobe
