#include "lbcf/rng.h"

#include <cmath>

namespace lbcf {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair; streams with nearby ids get unrelated states.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double Rng::normal(double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(engine_);
}

double Rng::gamma(double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

// Robert (1995): plain rejection near the mode, translated exponential in the tail.
double Rng::standard_normal_above(double lower) {
  if (lower < 0.5) {
    for (;;) {
      const double x = normal();
      if (x > lower) return x;
    }
  }
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double x = lower - std::log(1.0 - uniform()) / rate;
    const double accept = std::exp(-0.5 * (x - rate) * (x - rate));
    if (uniform() < accept) return x;
  }
}

double Rng::truncated_normal(double mean, bool positive) {
  if (positive) return mean + standard_normal_above(-mean);
  return mean - standard_normal_above(mean);
}

}  // namespace lbcf
