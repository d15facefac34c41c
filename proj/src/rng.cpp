#include "vprobe/rng.hpp"

#include <cstdio>

#include "vprobe/error.hpp"

namespace vprobe {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stable_hash(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix64(h);
}

std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::string_view> parts) {
  std::uint64_t h = mix64(parent ^ kGolden);
  for (std::string_view part : parts) {
    // length prefix keeps ("ab","c") distinct from ("a","bc")
    h = mix64(h ^ stable_hash(part) ^ (static_cast<std::uint64_t>(part.size()) << 56));
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t CounterRng::next() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

std::uint64_t CounterRng::uniform(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) throw Error(ErrorCode::kInvalidArgument, "uniform: empty range");
  const std::uint64_t span = hi - lo;
  if (span == ~0ULL) return next();
  const std::uint64_t n = span + 1;
  // largest multiple of n that fits, expressed without overflow
  const std::uint64_t limit = ~0ULL - (~0ULL % n + 1) % n;
  std::uint64_t x = next();
  while (x > limit) x = next();
  return lo + x % n;
}

double CounterRng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::string draw_number(std::uint64_t seed, int n_digits) {
  if (n_digits < 1 || n_digits > 18) {
    throw Error(ErrorCode::kInvalidArgument, "digit count must be in [1, 18]");
  }
  std::uint64_t lo = 1;
  for (int i = 1; i < n_digits; ++i) lo *= 10;
  const std::uint64_t hi = lo * 10 - 1;
  CounterRng rng(seed);
  return std::to_string(rng.uniform(lo, hi));
}

}  // namespace vprobe
