#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "lbcf/design_matrix.h"

namespace lbcf {

enum class Direction : std::uint8_t { Left = 0, Right = 1 };

struct SplitRule {
  std::int32_t feature = -1;
  double threshold = 0.0;
  Direction missing_goes = Direction::Left;

  // Observed values <= threshold go left; missing values follow missing_goes.
  bool sends_left(double x) const {
    return is_missing(x) ? missing_goes == Direction::Left : x <= threshold;
  }
  bool operator==(const SplitRule&) const = default;
};

struct TreeNode {
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t parent = -1;
  std::int32_t depth = 0;
  SplitRule rule;
  double leaf_value = 0.0;

  bool is_leaf() const { return left < 0; }
};

// Flat record used by the posterior-draw file, emitted in pre-order.
struct NodeRecord {
  bool leaf = true;
  std::int32_t feature = -1;
  double threshold = 0.0;
  Direction missing_goes = Direction::Left;
  double leaf_value = 0.0;
};

// Binary regression tree stored as an index-linked node array. Node 0 is the
// root. A default tree is a stump with leaf value 0.
class Tree {
 public:
  Tree() : nodes_(1) {}

  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  std::span<const TreeNode> nodes() const { return nodes_; }
  bool is_stump() const { return nodes_.size() == 1; }

  std::size_t num_leaves() const { return (nodes_.size() + 1) / 2; }
  std::vector<int> leaf_nodes() const;
  std::vector<int> internal_nodes() const;
  // Internal nodes whose two children are both leaves (PRUNE candidates).
  std::vector<int> prunable_nodes() const;
  // Internal non-root nodes; each pairs with its parent for SWAP.
  std::vector<int> swappable_nodes() const;

  // Leaf reached by `row` (NaN = missing). Throws StructureError when a split
  // addresses a feature outside the row.
  int traverse(std::span<const double> row) const;
  int leaf_for(const DesignMatrix& x, std::size_t row) const {
    int k = 0;
    while (!nodes_[k].is_leaf()) {
      const TreeNode& n = nodes_[k];
      k = n.rule.sends_left(x(row, n.rule.feature)) ? n.left : n.right;
    }
    return k;
  }
  bool descends_from(int node, int ancestor) const;

  void grow(int leaf, const SplitRule& rule);
  void prune(int node);
  void set_rule(int node, const SplitRule& rule);
  void set_leaf_value(int node, double value) { nodes_[node].leaf_value = value; }

  // Largest feature index used by any split, -1 for a stump.
  int max_feature() const;

  std::vector<NodeRecord> to_records() const;
  static Tree from_records(std::span<const NodeRecord> records);

  // Structural equality: same shape, rules and leaf values in pre-order,
  // independent of internal node numbering.
  friend bool operator==(const Tree& a, const Tree& b);

 private:
  bool equal_from(int ka, const Tree& other, int kb) const;

  std::vector<TreeNode> nodes_;
};

// log P(T) under P(split at depth d) = alpha (1 + d)^-beta.
double log_tree_prior(const Tree& tree, double alpha, double beta);

// Pre-order array of [leaf, feature, threshold, missing_goes, leaf_value].
nlohmann::json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

}  // namespace lbcf
