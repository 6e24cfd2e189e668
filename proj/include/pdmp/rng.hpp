#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace pdmp {

// splitmix64; used to derive well-separated seeds from (master, stream index).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  s ^= 0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL;
  return splitmix64(s);
}

// Thin deterministic RNG. Distribution sampling is hand-rolled so that output
// streams do not depend on standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1): 53 mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exponential with unit rate by inversion.
  double exponential() {
    double u = uniform();
    return -std::log1p(-u);
  }

  // Index into a normalized weight table by CDF inversion.
  std::size_t discrete(std::span<const double> weights) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  std::size_t index(std::size_t n) {
    return n == 0 ? 0 : static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pdmp
