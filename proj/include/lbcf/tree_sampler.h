#pragma once

#include <span>
#include <vector>

#include "lbcf/design_matrix.h"
#include "lbcf/leaf_model.h"
#include "lbcf/proposal.h"
#include "lbcf/rng.h"
#include "lbcf/tree.h"

namespace lbcf {

struct TreeSamplerSettings {
  double alpha = 0.95;
  double beta = 2.0;
  LeafPrior leaf;
  MoveProbabilities moves;
  std::size_t min_leaf_size = 5;
};

// Partial-residual data one tree is fit against. Unit u occupies design row
// rows[u], enters counts[u] residual observations, and sums[u] is the sum of
// those partial residuals.
struct ForestUnits {
  const DesignMatrix* design = nullptr;
  std::span<const std::size_t> rows;
  std::span<const double> counts;
  std::span<const double> sums;
};

struct TreeStepResult {
  MoveKind move = MoveKind::Grow;
  bool noop = false;
  bool accepted = false;
};

// One Metropolis-Hastings structure update followed by a Gibbs draw of the
// leaf values. Holds scratch buffers so repeated calls do not allocate.
class TreeSampler {
 public:
  TreeStepResult step(Tree& tree, const ForestUnits& units, double sigma2,
                      const TreeSamplerSettings& settings, Rng& rng);

  // Per-node leaf statistics of `tree` over `units`.
  std::vector<LeafStats> leaf_stats(const Tree& tree, const ForestUnits& units);

 private:
  void route(const Tree& tree, const ForestUnits& units, std::vector<int>& leaf_of) const;
  void accumulate(const Tree& tree, const ForestUnits& units, const std::vector<int>& leaf_of,
                  std::vector<LeafStats>& stats) const;

  std::vector<int> leaf_of_;
  std::vector<int> candidate_leaf_of_;
  std::vector<LeafStats> stats_;
  std::vector<LeafStats> candidate_stats_;
};

// Leaf value of every design row under `tree`.
void tree_fits(const Tree& tree, const DesignMatrix& design, std::span<double> out);

}  // namespace lbcf
