#include "lbcf/tree.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lbcf/errors.h"

namespace lbcf {

std::vector<int> Tree::leaf_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Tree::internal_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Tree::prunable_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    if (!n.is_leaf() && nodes_[n.left].is_leaf() && nodes_[n.right].is_leaf())
      out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Tree::swappable_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (!nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

int Tree::traverse(std::span<const double> row) const {
  int k = 0;
  while (!nodes_[k].is_leaf()) {
    const TreeNode& n = nodes_[k];
    if (n.rule.feature < 0 || static_cast<std::size_t>(n.rule.feature) >= row.size()) {
      throw StructureError("tree split on feature " + std::to_string(n.rule.feature) +
                           " but row has " + std::to_string(row.size()) + " features");
    }
    k = n.rule.sends_left(row[n.rule.feature]) ? n.left : n.right;
  }
  return k;
}

bool Tree::descends_from(int node, int ancestor) const {
  while (node >= 0) {
    if (node == ancestor) return true;
    node = nodes_[node].parent;
  }
  return false;
}

void Tree::grow(int leaf, const SplitRule& rule) {
  if (!nodes_.at(leaf).is_leaf()) throw StructureError("grow: node is not a leaf");
  const int depth = nodes_[leaf].depth + 1;
  const auto left = static_cast<std::int32_t>(nodes_.size());
  TreeNode child;
  child.parent = leaf;
  child.depth = depth;
  nodes_.push_back(child);
  nodes_.push_back(child);
  nodes_[leaf].left = left;
  nodes_[leaf].right = left + 1;
  nodes_[leaf].rule = rule;
  nodes_[leaf].leaf_value = 0.0;
}

void Tree::prune(int node) {
  TreeNode& n = nodes_.at(node);
  if (n.is_leaf() || !nodes_[n.left].is_leaf() || !nodes_[n.right].is_leaf()) {
    throw StructureError("prune: node must have two leaf children");
  }
  const int a = std::min(n.left, n.right);
  const int b = std::max(n.left, n.right);
  n.left = n.right = -1;
  n.rule = SplitRule{};
  n.leaf_value = 0.0;
  auto remap = [a, b](std::int32_t i) { return i < 0 ? i : i - (i > a) - (i > b); };
  std::vector<TreeNode> kept;
  kept.reserve(nodes_.size() - 2);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (static_cast<int>(i) == a || static_cast<int>(i) == b) continue;
    TreeNode t = nodes_[i];
    t.left = remap(t.left);
    t.right = remap(t.right);
    t.parent = remap(t.parent);
    kept.push_back(t);
  }
  nodes_ = std::move(kept);
}

void Tree::set_rule(int node, const SplitRule& rule) {
  if (nodes_.at(node).is_leaf()) throw StructureError("set_rule: node is a leaf");
  nodes_[node].rule = rule;
}

int Tree::max_feature() const {
  int m = -1;
  for (const auto& n : nodes_)
    if (!n.is_leaf()) m = std::max(m, static_cast<int>(n.rule.feature));
  return m;
}

std::vector<NodeRecord> Tree::to_records() const {
  std::vector<NodeRecord> out;
  out.reserve(nodes_.size());
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes_[k];
    if (n.is_leaf()) {
      out.push_back({true, -1, 0.0, Direction::Left, n.leaf_value});
    } else {
      out.push_back({false, n.rule.feature, n.rule.threshold, n.rule.missing_goes, 0.0});
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  return out;
}

Tree Tree::from_records(std::span<const NodeRecord> records) {
  if (records.empty()) throw StructureError("empty tree record stream");
  Tree t;
  t.nodes_.clear();
  t.nodes_.reserve(records.size());
  std::size_t pos = 0;
  // Iterative pre-order rebuild: each pending entry is a node index still
  // waiting for its right child.
  auto make = [&](std::int32_t parent, std::int32_t depth) {
    if (pos >= records.size()) throw StructureError("truncated tree record stream");
    const NodeRecord& r = records[pos++];
    TreeNode n;
    n.parent = parent;
    n.depth = depth;
    if (r.leaf) {
      n.leaf_value = r.leaf_value;
    } else {
      if (r.feature < 0) throw StructureError("internal node with negative feature");
      n.rule = {r.feature, r.threshold, r.missing_goes};
    }
    t.nodes_.push_back(n);
    return static_cast<std::int32_t>(t.nodes_.size() - 1);
  };
  struct Frame {
    std::int32_t node;
    int stage;
  };
  std::vector<Frame> stack;
  const auto root = make(-1, 0);
  if (!records[0].leaf) stack.push_back({root, 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    const std::int32_t parent = f.node;
    const std::int32_t depth = t.nodes_[parent].depth + 1;
    if (f.stage == 0) {
      f.stage = 1;
      if (pos >= records.size()) throw StructureError("truncated tree record stream");
      const bool leaf = records[pos].leaf;
      const auto child = make(parent, depth);
      t.nodes_[parent].left = child;
      if (!leaf) stack.push_back({child, 0});
    } else if (f.stage == 1) {
      f.stage = 2;
      if (pos >= records.size()) throw StructureError("truncated tree record stream");
      const bool leaf = records[pos].leaf;
      const auto child = make(parent, depth);
      t.nodes_[parent].right = child;
      if (!leaf) stack.push_back({child, 0});
    } else {
      stack.pop_back();
    }
  }
  if (pos != records.size()) throw StructureError("trailing records after tree");
  return t;
}

bool Tree::equal_from(int ka, const Tree& other, int kb) const {
  const TreeNode& a = nodes_[ka];
  const TreeNode& b = other.nodes_[kb];
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.leaf_value == b.leaf_value;
  return a.rule == b.rule && equal_from(a.left, other, b.left) &&
         equal_from(a.right, other, b.right);
}

bool operator==(const Tree& a, const Tree& b) {
  return a.size() == b.size() && a.equal_from(0, b, 0);
}

double log_tree_prior(const Tree& tree, double alpha, double beta) {
  double lp = 0.0;
  for (const auto& n : tree.nodes()) {
    const double p_split = alpha * std::pow(1.0 + n.depth, -beta);
    lp += n.is_leaf() ? std::log1p(-p_split) : std::log(p_split);
  }
  return lp;
}

nlohmann::json tree_to_json(const Tree& tree) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : tree.to_records()) {
    out.push_back(nlohmann::json::array({r.leaf ? 1 : 0, r.feature, r.threshold,
                                        static_cast<int>(r.missing_goes), r.leaf_value}));
  }
  return out;
}

Tree tree_from_json(const nlohmann::json& j) {
  std::vector<NodeRecord> records;
  records.reserve(j.size());
  for (const auto& n : j) {
    if (!n.is_array() || n.size() != 5) throw ParseError("malformed tree node record");
    NodeRecord r;
    r.leaf = n[0].get<int>() == 1;
    r.feature = n[1].get<std::int32_t>();
    r.threshold = n[2].get<double>();
    r.missing_goes = n[3].get<int>() == 0 ? Direction::Left : Direction::Right;
    r.leaf_value = n[4].get<double>();
    records.push_back(r);
  }
  return Tree::from_records(records);
}

}  // namespace lbcf
