#include "lbcf/leaf_model.h"

#include <cmath>
#include <numbers>

#include "lbcf/errors.h"

namespace lbcf {

double log_marginal_likelihood(const LeafStats& leaf, double sigma2, LeafPrior prior) {
  if (leaf.count <= 0.0) return 0.0;
  const double n = leaf.count;
  const double denom = sigma2 + n * prior.variance;
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) + 0.5 * std::log(sigma2 / denom) +
         prior.variance * leaf.sum * leaf.sum / (2.0 * sigma2 * denom);
}

double log_marginal_likelihood(std::span<const LeafStats> leaves, double sigma2, LeafPrior prior) {
  double total = 0.0;
  for (const auto& leaf : leaves) total += log_marginal_likelihood(leaf, sigma2, prior);
  return total;
}

double log_marginal_likelihood(std::span<const std::vector<double>> partition, double sigma2,
                               LeafPrior prior) {
  if (!(sigma2 > 0.0)) throw ValidationError("sigma2 must be positive");
  double total = 0.0;
  for (const auto& leaf : partition) {
    LeafStats s;
    double ss = 0.0;
    for (double r : leaf) {
      if (!std::isfinite(r)) throw ValidationError("non-finite residual in leaf partition");
      s.add(1.0, r);
      ss += r * r;
    }
    total += log_marginal_likelihood(s, sigma2, prior) - ss / (2.0 * sigma2);
  }
  return total;
}

NormalPosterior leaf_posterior(const LeafStats& leaf, double sigma2, LeafPrior prior) {
  const double v = 1.0 / (1.0 / prior.variance + leaf.count / sigma2);
  return {v * leaf.sum / sigma2, v};
}

void sample_leaf_values(Tree& tree, std::span<const LeafStats> node_stats, double sigma2,
                        LeafPrior prior, Rng& rng) {
  for (std::size_t k = 0; k < tree.size(); ++k) {
    if (!tree.node(k).is_leaf()) continue;
    const auto post = leaf_posterior(node_stats[k], sigma2, prior);
    tree.set_leaf_value(static_cast<int>(k), rng.normal(post.mean, std::sqrt(post.variance)));
  }
}

}  // namespace lbcf
