#pragma once

#include <cmath>
#include <cstdint>

namespace autodml {

// Counter-based SplitMix64 stream. State advances by the golden-ratio
// increment and each output is an avalanche mix of the new state, so draw i
// from seed s equals mix64(s + (i+1)*0x9E3779B97F4A7C15). Disjoint seeds give
// independent-looking streams, which is what the simulation harness relies on
// when it derives the replicate-r stream from base_seed + r.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));  // u1 < 1, so log1p is safe
    double phi = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  // Uniform integer in [0, bound). bound must be positive. The modulo bias is
  // below 2^-53 for every bound used here and keeps the stream arithmetic
  // reproducible across platforms.
  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace autodml
