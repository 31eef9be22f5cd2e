#pragma once

#include <cstdint>
#include <vector>

namespace lantern {

// PCG32 (XSH-RR 64/32). Fixed algorithm so identical (seed, stream) pairs
// produce identical sequences on every platform.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL,
                 std::uint64_t stream = 0) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  // Uniform in [0, 1) with 32-bit resolution.
  double next_double() { return next_u32() * 0x1p-32; }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // n draws in [0, 1); advances the state by exactly n steps.
  std::vector<double> uniforms(std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = next_double();
    return out;
  }

  std::uint32_t next_below(std::uint32_t bound) {
    // Unbiased bounded draw (Lemire-style rejection).
    const std::uint32_t threshold = (-bound) % bound;
    for (;;) {
      const std::uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

// Derives a stable stream id from a purpose tag and indices, so independent
// consumers of the same master seed never share a PCG32 stream.
inline std::uint64_t rng_stream(std::uint64_t purpose, std::uint64_t a = 0,
                                std::uint64_t b = 0) {
  std::uint64_t h = purpose * 0x9e3779b97f4a7c15ULL;
  h ^= a + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= b + 0x94d049bb133111ebULL + (h << 6) + (h >> 2);
  h *= 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

}  // namespace lantern
