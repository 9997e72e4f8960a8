#include "lbcf/proposal.h"

#include <cmath>
#include <vector>

namespace lbcf {
namespace {

// Distinct observed ranks of `feature` among units whose current leaf lies
// under `node` (or is `node`). Returned in first-seen order.
std::vector<std::int32_t> distinct_ranks_under(const Tree& tree, const UnitView& units, int node,
                                               std::size_t feature) {
  std::vector<char> seen(units.design.distinct_count(feature), 0);
  std::vector<std::int32_t> out;
  const bool leaf = tree.node(node).is_leaf();
  for (std::size_t u = 0; u < units.rows.size(); ++u) {
    const int at = units.leaf_of[u];
    if (leaf ? at != node : !tree.descends_from(at, node)) continue;
    const std::int32_t r = units.design.rank(units.rows[u], feature);
    if (r < 0 || seen[r]) continue;
    seen[r] = 1;
    out.push_back(r);
  }
  return out;
}

std::optional<SplitRule> draw_rule(const Tree& tree, const UnitView& units, int node, Rng& rng) {
  if (units.design.cols() == 0) return std::nullopt;
  const std::size_t feature = rng.index(units.design.cols());
  const auto ranks = distinct_ranks_under(tree, units, node, feature);
  if (ranks.empty()) return std::nullopt;
  const std::int32_t r = ranks[rng.index(ranks.size())];
  const Direction missing = rng.bernoulli(0.5) ? Direction::Right : Direction::Left;
  return SplitRule{static_cast<std::int32_t>(feature), units.design.distinct_value(feature, r),
                   missing};
}

double prob_of(MoveKind k, const MoveProbabilities& p) {
  switch (k) {
    case MoveKind::Grow: return p.grow;
    case MoveKind::Prune: return p.prune;
    case MoveKind::Change: return p.change;
    case MoveKind::Swap: return p.swap;
  }
  return 0.0;
}

}  // namespace

MoveKind draw_move(const MoveProbabilities& probs, Rng& rng) {
  const double total = probs.grow + probs.prune + probs.change + probs.swap;
  double u = rng.uniform() * total;
  if ((u -= probs.grow) < 0) return MoveKind::Grow;
  if ((u -= probs.prune) < 0) return MoveKind::Prune;
  if ((u -= probs.change) < 0) return MoveKind::Change;
  return MoveKind::Swap;
}

Proposal propose_move(const Tree& tree, const UnitView& units, Rng& rng,
                      const MoveProbabilities& probs, std::optional<MoveKind> forced) {
  Proposal p;
  p.kind = forced ? *forced : draw_move(probs, rng);
  switch (p.kind) {
    case MoveKind::Grow: {
      const auto leaves = tree.leaf_nodes();
      const int leaf = leaves[rng.index(leaves.size())];
      const auto rule = draw_rule(tree, units, leaf, rng);
      if (!rule) return p;
      p.candidate = tree;
      p.candidate.grow(leaf, *rule);
      p.node = leaf;
      p.log_transition_ratio =
          std::log(prob_of(MoveKind::Prune, probs) / p.candidate.prunable_nodes().size()) -
          std::log(prob_of(MoveKind::Grow, probs) / leaves.size());
      break;
    }
    case MoveKind::Prune: {
      const auto nog = tree.prunable_nodes();
      if (nog.empty()) return p;
      const int node = nog[rng.index(nog.size())];
      p.candidate = tree;
      p.candidate.prune(node);
      p.node = node;
      p.log_transition_ratio =
          std::log(prob_of(MoveKind::Grow, probs) / p.candidate.num_leaves()) -
          std::log(prob_of(MoveKind::Prune, probs) / nog.size());
      break;
    }
    case MoveKind::Change: {
      const auto internal = tree.internal_nodes();
      if (internal.empty()) return p;
      const int node = internal[rng.index(internal.size())];
      const auto rule = draw_rule(tree, units, node, rng);
      if (!rule) return p;
      p.candidate = tree;
      p.candidate.set_rule(node, *rule);
      p.node = node;
      break;
    }
    case MoveKind::Swap: {
      const auto children = tree.swappable_nodes();
      if (children.empty()) return p;
      const int child = children[rng.index(children.size())];
      const int parent = tree.node(child).parent;
      const SplitRule upper = tree.node(parent).rule;
      const SplitRule lower = tree.node(child).rule;
      if (upper == lower) return p;
      p.candidate = tree;
      p.candidate.set_rule(parent, lower);
      p.candidate.set_rule(child, upper);
      p.node = parent;
      break;
    }
  }
  p.noop = false;
  return p;
}

}  // namespace lbcf
