#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace rbsh {

/// Counter-based splittable generator (SplitMix64 finalizer over key+counter).
///
/// Every random decision in the pipeline draws from a named substream of one
/// root seed, so runs are reproducible and individual stages can be re-run in
/// isolation without disturbing each other's streams.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ 0x9e3779b97f4a7c15ull) ^ mix(stream + 0x6a09e667f3bcc909ull)) {}

  SplitRng split(std::string_view name) const { return SplitRng(key_, fnv1a(name)); }
  SplitRng split(std::uint64_t index) const {
    return SplitRng(key_, 0xd1b54a32d192ed03ull + index);
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  /// Uniform in [0, 1).
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform in (0, 1].
  double next_open() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double next_gaussian() {
    const double u = next_open();
    const double v = next_double();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // rejection-free modulo is fine here: n is tiny relative to 2^64
    return next_u64() % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }
  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rbsh
