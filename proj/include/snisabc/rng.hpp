#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace snisabc {

// SplitMix64 step. Used to derive seeds and to fill generator state.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman/Vigna). Chosen over the std engines because every
// draw, including the normal transform, must reproduce bit-for-bit across
// platforms and because per-trial reseeding has to stay cheap: experiments
// derive an independent stream for each (master_seed, query, trial, method).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_open01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Unbiased integer in [0, bound) via Lemire's multiply-shift rejection.
  std::size_t uniform_index(std::size_t bound) {
    const std::uint64_t n = bound;
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  // Standard normal via Box-Muller. One value per call (the sine branch is
  // discarded) so the stream position never depends on call history.
  double normal() {
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

// Deterministic stream for a (master_seed, a, b, c) tuple. Distinct tuples
// land in distinct streams regardless of evaluation order or thread count.
inline RngStream derive_stream(std::uint64_t master, std::uint64_t a,
                               std::uint64_t b, std::uint64_t c) {
  std::uint64_t s = master;
  std::uint64_t k = a;
  s ^= splitmix64_next(k);
  k = b + 0x6A09E667F3BCC909ULL;
  s ^= splitmix64_next(k);
  k = c + 0xBB67AE8584CAA73BULL;
  s ^= splitmix64_next(k);
  std::uint64_t fin = s;
  return RngStream(splitmix64_next(fin));
}

}  // namespace snisabc
