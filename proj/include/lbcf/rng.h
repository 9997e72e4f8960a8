#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace lbcf {

// Seeded random stream. Every independent consumer (forest block, chain,
// replication) owns one, keyed by (seed, stream) so results never depend on
// scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1, std::uint64_t stream = 0);

  double uniform();  // [0, 1)
  double normal(double mean = 0.0, double sd = 1.0);
  // Gamma with the given shape and rate (mean shape / rate).
  double gamma(double shape, double rate);
  bool bernoulli(double p);
  std::size_t index(std::size_t n);  // uniform over [0, n)
  // N(mean, 1) restricted to (0, inf) when positive, (-inf, 0] otherwise.
  double truncated_normal(double mean, bool positive);

  std::mt19937_64& engine() { return engine_; }

 private:
  double standard_normal_above(double lower);
  std::mt19937_64 engine_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace lbcf
