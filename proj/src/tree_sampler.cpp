#include "lbcf/tree_sampler.h"

#include <cmath>

namespace lbcf {

void TreeSampler::route(const Tree& tree, const ForestUnits& units,
                        std::vector<int>& leaf_of) const {
  leaf_of.resize(units.rows.size());
  for (std::size_t u = 0; u < units.rows.size(); ++u)
    leaf_of[u] = tree.leaf_for(*units.design, units.rows[u]);
}

void TreeSampler::accumulate(const Tree& tree, const ForestUnits& units,
                             const std::vector<int>& leaf_of,
                             std::vector<LeafStats>& stats) const {
  stats.assign(tree.size(), LeafStats{});
  for (std::size_t u = 0; u < leaf_of.size(); ++u)
    stats[leaf_of[u]].add(units.counts[u], units.sums[u]);
}

std::vector<LeafStats> TreeSampler::leaf_stats(const Tree& tree, const ForestUnits& units) {
  std::vector<int> leaf_of;
  route(tree, units, leaf_of);
  std::vector<LeafStats> stats;
  accumulate(tree, units, leaf_of, stats);
  return stats;
}

namespace {

double leaves_log_ml(const Tree& tree, const std::vector<LeafStats>& stats, double sigma2,
                     LeafPrior prior) {
  double total = 0.0;
  for (std::size_t k = 0; k < tree.size(); ++k)
    if (tree.node(k).is_leaf()) total += log_marginal_likelihood(stats[k], sigma2, prior);
  return total;
}

// Leaves created or re-partitioned by the move must hold enough units.
bool respects_min_leaf(const Tree& candidate, const std::vector<LeafStats>& stats, int node,
                       std::size_t min_units) {
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    if (!candidate.node(k).is_leaf()) continue;
    if (!candidate.descends_from(static_cast<int>(k), node)) continue;
    if (static_cast<int>(k) == node) continue;
    if (stats[k].units < min_units) return false;
  }
  return true;
}

}  // namespace

TreeStepResult TreeSampler::step(Tree& tree, const ForestUnits& units, double sigma2,
                                 const TreeSamplerSettings& settings, Rng& rng) {
  route(tree, units, leaf_of_);
  UnitView view{*units.design, units.rows, leaf_of_};
  Proposal prop = propose_move(tree, view, rng, settings.moves);

  TreeStepResult result{prop.kind, prop.noop, false};
  accumulate(tree, units, leaf_of_, stats_);

  if (!prop.noop) {
    route(prop.candidate, units, candidate_leaf_of_);
    accumulate(prop.candidate, units, candidate_leaf_of_, candidate_stats_);
    const bool sized = prop.kind == MoveKind::Prune ||
                       respects_min_leaf(prop.candidate, candidate_stats_, prop.node,
                                         settings.min_leaf_size);
    if (sized) {
      const double log_ratio =
          log_tree_prior(prop.candidate, settings.alpha, settings.beta) -
          log_tree_prior(tree, settings.alpha, settings.beta) +
          leaves_log_ml(prop.candidate, candidate_stats_, sigma2, settings.leaf) -
          leaves_log_ml(tree, stats_, sigma2, settings.leaf) + prop.log_transition_ratio;
      if (std::log(rng.uniform()) < log_ratio) {
        tree = std::move(prop.candidate);
        std::swap(stats_, candidate_stats_);
        result.accepted = true;
      }
    }
  }

  sample_leaf_values(tree, stats_, sigma2, settings.leaf, rng);
  return result;
}

void tree_fits(const Tree& tree, const DesignMatrix& design, std::span<double> out) {
  if (tree.is_stump()) {
    std::fill(out.begin(), out.end(), tree.node(0).leaf_value);
    return;
  }
  for (std::size_t r = 0; r < design.rows(); ++r)
    out[r] = tree.node(tree.leaf_for(design, r)).leaf_value;
}

}  // namespace lbcf
