#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace pilotloc {

// SplitMix64 finalizer; the fixed rule for deriving per-point and per-trial
// seeds from the master seed. Reductions are slot-indexed, so identical
// seeds give identical output regardless of thread count.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded stream of uniforms, Gaussians, and symbol indices. Box-Muller on
// explicit arithmetic (not std::normal_distribution) so the draw sequence is
// fixed by the engine alone.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // 53-bit mantissa uniform in (0, 1]; never 0 so log() below is safe.
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(ang);
    have_spare_ = true;
    return r * std::cos(ang);
  }

  // Circular complex Gaussian with total variance `variance` (i.e. each of
  // the real and imaginary parts carries variance/2).
  std::complex<double> complex_gaussian(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = gaussian();
    const double im = gaussian();
    return {s * re, s * im};
  }

  // Uniform symbol index in [0, m); rejection keeps the draw unbiased.
  int symbol(int m) {
    const std::uint64_t span = static_cast<std::uint64_t>(m);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t bits = engine_();
    while (bits >= limit) bits = engine_();
    return static_cast<int>(bits % span);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace pilotloc
