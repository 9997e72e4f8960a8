#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "lbcf/design_matrix.h"
#include "lbcf/rng.h"
#include "lbcf/tree.h"

namespace lbcf {

enum class MoveKind : std::uint8_t { Grow, Prune, Change, Swap };

struct MoveProbabilities {
  double grow = 0.25;
  double prune = 0.25;
  double change = 0.40;
  double swap = 0.10;
};

// The forest units a tree currently partitions: design rows plus the leaf
// each unit sits in under the current tree.
struct UnitView {
  const DesignMatrix& design;
  std::span<const std::size_t> rows;
  std::span<const int> leaf_of;
};

struct Proposal {
  MoveKind kind = MoveKind::Grow;
  // Move impossible on this tree (e.g. PRUNE on a stump, no observed split
  // value). The sampler treats it as an automatic rejection.
  bool noop = true;
  // GROW/PRUNE/CHANGE: the node acted on. SWAP: the parent of the pair.
  int node = -1;
  Tree candidate;
  // log q(T | T') - log q(T' | T). The split-rule prior is uniform over
  // feature, distinct node value and missing direction, so it cancels the
  // matching proposal terms and only the node-choice factors remain.
  double log_transition_ratio = 0.0;
};

MoveKind draw_move(const MoveProbabilities& probs, Rng& rng);

Proposal propose_move(const Tree& tree, const UnitView& units, Rng& rng,
                      const MoveProbabilities& probs = {},
                      std::optional<MoveKind> forced = std::nullopt);

}  // namespace lbcf
