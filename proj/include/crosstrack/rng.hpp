#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace crosstrack::sim {

/// SplitMix64 finaliser (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: draw k of a stream keyed by `key` is
/// splitmix64(key + k * 0x9e3779b97f4a7c15). Uniforms take the top 53 bits;
/// normals use Box-Muller on two consecutive uniforms; Poisson counts use
/// Knuth's multiplication method. Every stream is independent of how many
/// draws other streams consume.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream_tag)
      : key_(splitmix64(seed ^ splitmix64(stream_tag))) {}

  std::uint64_t next_u64() {
    ++counter_;
    return splitmix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  double normal(double sigma = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace crosstrack::sim
