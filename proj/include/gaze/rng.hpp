#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "gaze/error.hpp"

namespace gaze {

// Deterministic splitmix64 stream. The standard <random> engines are
// deterministic too, but the distributions are not pinned across standard
// libraries; everything here is, so pipeline outputs and training runs are
// reproducible byte for byte from a seed.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : state_(seed) {}

  // Independent substream for (seed, tags...); used to give every sampled
  // output / scene / observer its own stream instead of sharing one.
  static RandomStream derive(uint64_t seed, uint64_t a = 0, uint64_t b = 0,
                             uint64_t c = 0) {
    uint64_t s = seed;
    s = mix(s ^ (a + 0x9E3779B97F4A7C15ULL));
    s = mix(s ^ (b + 0xBF58476D1CE4E5B9ULL));
    s = mix(s ^ (c + 0x94D049BB133111EBULL));
    return RandomStream(s);
  }

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Box-Muller; one fresh pair of uniforms per call.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    if (lo > hi) fail_internal("uniform_int: empty range");
    const uint64_t span = uint64_t(hi - lo) + 1;
    return lo + int((unsigned __int128)(next_u64()) * span >> 64);
  }

  // Sample an index from a normalized probability vector.
  int categorical(std::span<const double> probs) {
    if (probs.empty()) fail_internal("categorical: empty distribution");
    const double u = next_double();
    double cdf = 0.0;
    for (size_t k = 0; k < probs.size(); ++k) {
      cdf += probs[k];
      if (u < cdf) return int(k);
    }
    return int(probs.size()) - 1;
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  uint64_t state_;
};

}  // namespace gaze
