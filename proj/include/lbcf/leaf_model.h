#pragma once

#include <span>
#include <vector>

#include "lbcf/rng.h"
#include "lbcf/tree.h"

namespace lbcf {

// N(0, variance) prior on a leaf parameter.
struct LeafPrior {
  double variance = 1.0;
};

// Sufficient statistics of the residuals routed to one leaf. `units` counts
// forest units (subjects) for the minimum-leaf-size rule; `count` counts the
// residual observations the leaf value enters.
struct LeafStats {
  std::size_t units = 0;
  double count = 0.0;
  double sum = 0.0;

  void add(double n, double s) {
    ++units;
    count += n;
    sum += s;
  }
  LeafStats& operator+=(const LeafStats& o) {
    units += o.units;
    count += o.count;
    sum += o.sum;
    return *this;
  }
};

// Log marginal likelihood of one leaf with its mean integrated out, dropping
// the -sum(r^2)/(2 sigma2) term that is identical for every partition of the
// same residuals.
double log_marginal_likelihood(const LeafStats& leaf, double sigma2, LeafPrior prior);
double log_marginal_likelihood(std::span<const LeafStats> leaves, double sigma2, LeafPrior prior);
// Residual-level entry point returning the full log marginal density,
// including the sum-of-squares term; rejects non-finite residuals.
double log_marginal_likelihood(std::span<const std::vector<double>> partition, double sigma2,
                               LeafPrior prior);

struct NormalPosterior {
  double mean = 0.0;
  double variance = 0.0;
};
NormalPosterior leaf_posterior(const LeafStats& leaf, double sigma2, LeafPrior prior);

// Draws every leaf value of `tree` from its conjugate posterior. `node_stats`
// is indexed by node id; entries for internal nodes are ignored.
void sample_leaf_values(Tree& tree, std::span<const LeafStats> node_stats, double sigma2,
                        LeafPrior prior, Rng& rng);

}  // namespace lbcf
