#pragma once

#include <cmath>
#include <cstdint>

namespace wassos {

// Counter-based pseudorandom generator. A stream is keyed by
// (seed, step, item, purpose); outputs are a pure function of the key and
// an internal draw counter, so any stream can be replayed in isolation and
// results do not depend on the order streams are created in.
enum class RngPurpose : std::uint64_t {
  ParamInit = 1,
  Shuffle = 2,
  NoiseSem = 3,
  NoiseSyn = 4,
  NoiseLatent = 5,
  Synth = 6,
  Test = 7,
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t step, std::uint64_t item,
             RngPurpose purpose)
      : key_(derive_key(seed, step, item, static_cast<std::uint64_t>(purpose))) {}

  // SplitMix64 finalizer over (key, counter).
  std::uint64_t next_u64() {
    std::uint64_t x = key_ + 0x9e3779b97f4a7c15ULL * ++counter_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_uniform();
  }

  // Standard normal via Box-Muller; consumes two uniforms per draw.
  double next_normal() {
    double u1 = next_uniform();
    double u2 = next_uniform();
    // Guard the log against u1 == 0.
    u1 = u1 > 0.0 ? u1 : 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t step,
                                  std::uint64_t item, std::uint64_t purpose) {
    std::uint64_t k = seed;
    for (std::uint64_t w : {step, item, purpose}) {
      k ^= w + 0x9e3779b97f4a7c15ULL + (k << 6) + (k >> 2);
      k = (k ^ (k >> 33)) * 0xff51afd7ed558ccdULL;
      k = (k ^ (k >> 33)) * 0xc4ceb9fe1a85ec53ULL;
      k ^= k >> 33;
    }
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace wassos
