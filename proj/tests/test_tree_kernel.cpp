#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "lbcf/errors.h"
#include "lbcf/leaf_model.h"
#include "lbcf/proposal.h"
#include "lbcf/tree.h"
#include "lbcf/tree_sampler.h"
#include "test_util.h"

using namespace lbcf;

namespace {

Tree one_split(double threshold = 0.5, Direction missing = Direction::Left) {
  Tree t;
  t.grow(0, SplitRule{0, threshold, missing});
  return t;
}

}  // namespace

TEST(Traverse, RuleSendsRowsToTheExpectedLeaf) {
  const Tree t = one_split();
  const int left = t.node(0).left, right = t.node(0).right;
  const double low[] = {0.3}, miss[] = {kMissing}, high[] = {0.7}, edge[] = {0.5};
  EXPECT_EQ(t.traverse(low), left);
  EXPECT_EQ(t.traverse(miss), left);
  EXPECT_EQ(t.traverse(high), right);
  EXPECT_EQ(t.traverse(edge), left);
}

TEST(Traverse, MissingCanBeRoutedRight) {
  const Tree t = one_split(0.5, Direction::Right);
  const double miss[] = {kMissing};
  EXPECT_EQ(t.traverse(miss), t.node(0).right);
}

TEST(Traverse, FeatureOutsideRowIsAStructureError) {
  Tree t;
  t.grow(0, SplitRule{3, 0.0, Direction::Left});
  const double row[] = {1.0, 2.0};
  EXPECT_THROW(t.traverse(row), StructureError);
}

TEST(Traverse, PartitionIsDisjointAndExhaustive) {
  Rng rng(11);
  const DesignMatrix x = random_design(200, 3, rng, 0.1);
  for (int rep = 0; rep < 30; ++rep) {
    const Tree t = random_tree(x, rng, 6);
    const auto leaf_ids = t.leaf_nodes();
    const std::set<int> leaves(leaf_ids.begin(), leaf_ids.end());
    std::size_t routed = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const int k = t.leaf_for(x, r);
      ASSERT_TRUE(leaves.count(k));
      ASSERT_EQ(k, t.traverse(x.row(r)));
      ++routed;
    }
    EXPECT_EQ(routed, x.rows());
    EXPECT_LT(t.max_feature(), static_cast<int>(x.cols()));
  }
}

TEST(TreePrior, StumpIsOneMinusAlpha) {
  EXPECT_NEAR(log_tree_prior(Tree{}, 0.95, 2.0), -2.995732273553991, 1e-12);
  EXPECT_NEAR(log_tree_prior(Tree{}, 0.25, 3.0), -0.2876820724517809, 1e-12);
  for (double beta : {0.5, 1.0, 2.0, 7.0}) EXPECT_NEAR(std::exp(log_tree_prior(Tree{}, 0.6, beta)), 0.4, 1e-14);
}

TEST(TreePrior, RootSplitWithTwoLeaves) {
  EXPECT_NEAR(log_tree_prior(one_split(), 0.95, 2.0), -0.5935988353886914, 1e-12);
}

TEST(TreePrior, DeeperTreeMatchesProduct) {
  Tree t = one_split();
  t.grow(t.node(0).right, SplitRule{0, 0.8, Direction::Left});
  const double a = 0.95, b = 2.0;
  const double p1 = a * std::pow(2.0, -b), p2 = a * std::pow(3.0, -b);
  const double expected = std::log(a) + std::log(1 - p1) + std::log(p1) + 2 * std::log(1 - p2);
  EXPECT_NEAR(log_tree_prior(t, a, b), expected, 1e-12);
}

TEST(GrowPrune, PruneRestoresTheTree) {
  Rng rng(5);
  const DesignMatrix x = random_design(100, 4, rng, 0.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Tree before = random_tree(x, rng, 5);
    const auto leaves = before.leaf_nodes();
    const int leaf = leaves[rng.index(leaves.size())];
    Tree t = before;
    t.grow(leaf, SplitRule{static_cast<std::int32_t>(rng.index(4)), rng.uniform(), Direction::Right});
    EXPECT_FALSE(t == before);
    t.prune(leaf);
    EXPECT_TRUE(t == before);
  }
}

TEST(GrowPrune, InvalidTargetsThrow) {
  Tree t = one_split();
  EXPECT_THROW(t.grow(0, SplitRule{0, 0.1, Direction::Left}), StructureError);
  EXPECT_THROW(Tree{}.prune(0), StructureError);
}

TEST(Proposal, ForcedGrowOnStumpGivesOneSplit) {
  Rng rng(3);
  const DesignMatrix x = random_design(30, 2, rng, 0.0);
  Tree stump;
  std::vector<std::size_t> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<int> leaf_of(rows.size(), 0);
  const Proposal p = propose_move(stump, UnitView{x, rows, leaf_of}, rng, {}, MoveKind::Grow);
  ASSERT_FALSE(p.noop);
  EXPECT_EQ(p.candidate.size(), 3u);
  EXPECT_EQ(p.candidate.num_leaves(), 2u);
  // log[(p_prune / 1) / (p_grow / 1)] with the default move probabilities.
  EXPECT_NEAR(p.log_transition_ratio, 0.0, 1e-12);
}

TEST(Proposal, ForcedPruneInvertsGrowAndIsNoopOnStump) {
  Rng rng(4);
  const DesignMatrix x = random_design(30, 2, rng, 0.0);
  std::vector<std::size_t> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  Tree t = one_split(x(0, 0));
  std::vector<int> leaf_of(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) leaf_of[i] = t.leaf_for(x, i);
  const Proposal p = propose_move(t, UnitView{x, rows, leaf_of}, rng, {}, MoveKind::Prune);
  ASSERT_FALSE(p.noop);
  EXPECT_TRUE(p.candidate.is_stump());

  std::vector<int> at_root(rows.size(), 0);
  const Proposal none = propose_move(Tree{}, UnitView{x, rows, at_root}, rng, {}, MoveKind::Prune);
  EXPECT_TRUE(none.noop);
}

TEST(Proposal, SplitValuesComeFromUnitsUnderTheNode) {
  Rng rng(8);
  const DesignMatrix x = random_design(40, 1, rng, 0.0);
  std::vector<std::size_t> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  Tree t = one_split(0.5);
  std::vector<int> leaf_of(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) leaf_of[i] = t.leaf_for(x, i);
  for (int k = 0; k < 200; ++k) {
    const Proposal p = propose_move(t, UnitView{x, rows, leaf_of}, rng, {}, MoveKind::Grow);
    if (p.noop) continue;
    const TreeNode& split = p.candidate.node(p.node);
    const bool under_left = p.node == t.node(0).left;
    EXPECT_EQ(split.rule.threshold <= 0.5, under_left);
  }
}

TEST(LogMarginal, EmptyPartitionIsZero) {
  EXPECT_EQ(log_marginal_likelihood(std::span<const std::vector<double>>{}, 1.0, LeafPrior{1.0}), 0.0);
}

TEST(LogMarginal, SingleObservationExamples) {
  const std::vector<std::vector<double>> zero{{0.0}}, one{{1.0}};
  EXPECT_NEAR(log_marginal_likelihood(zero, 1.0, LeafPrior{1.0}), -1.2655121234846454, 1e-12);
  EXPECT_NEAR(log_marginal_likelihood(one, 1.0, LeafPrior{1.0}), -1.5155121234846454, 1e-12);
}

TEST(LogMarginal, RejectsBadInput) {
  const std::vector<std::vector<double>> bad{{1.0, NAN}};
  EXPECT_THROW(log_marginal_likelihood(bad, 1.0, LeafPrior{1.0}), ValidationError);
  const std::vector<std::vector<double>> ok{{1.0}};
  EXPECT_THROW(log_marginal_likelihood(ok, 0.0, LeafPrior{1.0}), ValidationError);
}

TEST(LogMarginal, MatchesQuadratureOnRandomLeaves) {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + rng.index(5);
    std::vector<double> r(n);
    for (auto& v : r) v = rng.normal(0.0, 1.5);
    const double sigma2 = 0.2 + 2.0 * rng.uniform();
    const double tau2 = 0.05 + 2.0 * rng.uniform();
    const std::vector<std::vector<double>> part{r};
    EXPECT_NEAR(log_marginal_likelihood(part, sigma2, LeafPrior{tau2}), quadrature_log_marginal(r, sigma2, tau2), 1e-6);
  }
}

TEST(LogMarginal, StatsFormDiffersOnlyByPartitionInvariantTerm) {
  Rng rng(2);
  std::vector<double> a{0.3, -1.0, 2.0}, b{0.7, 0.1};
  double ss = 0.0;
  LeafStats sa, sb;
  for (double v : a) sa.add(1, v), ss += v * v;
  for (double v : b) sb.add(1, v), ss += v * v;
  const std::vector<LeafStats> stats{sa, sb};
  const std::vector<std::vector<double>> part{a, b};
  EXPECT_NEAR(log_marginal_likelihood(stats, 0.8, LeafPrior{0.3}) - ss / 1.6,
              log_marginal_likelihood(part, 0.8, LeafPrior{0.3}), 1e-12);
}

TEST(LeafPosterior, ConjugateExample) {
  LeafStats s;
  s.count = 4;
  s.sum = 2;
  const auto post = leaf_posterior(s, 1.0, LeafPrior{1.0});
  EXPECT_NEAR(post.mean, 0.4, 1e-14);
  EXPECT_NEAR(post.variance, 0.2, 1e-14);
}

TEST(LeafPosterior, EmptyLeafIsThePriorAndLargeLeafIsTheMean) {
  const auto prior = leaf_posterior(LeafStats{}, 1.0, LeafPrior{0.3});
  EXPECT_EQ(prior.mean, 0.0);
  EXPECT_NEAR(prior.variance, 0.3, 1e-15);
  LeafStats big;
  big.count = 1e9;
  big.sum = 0.7 * 1e9;
  EXPECT_NEAR(leaf_posterior(big, 1.0, LeafPrior{1.0}).mean, 0.7, 1e-8);
}

TEST(LeafPosterior, SampledMomentsMatch) {
  Tree t = one_split();
  std::vector<LeafStats> stats(3);
  stats[1].count = 4;
  stats[1].sum = 2;  // N(0.4, 0.2)
  Rng rng(99);
  const int n = 40000;
  double m1 = 0, m2 = 0, e1 = 0, e2 = 0;
  for (int k = 0; k < n; ++k) {
    sample_leaf_values(t, stats, 1.0, LeafPrior{1.0}, rng);
    const double a = t.node(1).leaf_value, b = t.node(2).leaf_value;
    m1 += a, m2 += a * a, e1 += b, e2 += b * b;
  }
  m1 /= n, m2 /= n, e1 /= n, e2 /= n;
  EXPECT_NEAR(m1, 0.4, 3 * std::sqrt(0.2 / n));
  EXPECT_NEAR(m2 - m1 * m1, 0.2, 3 * 0.2 * std::sqrt(2.0 / n));
  EXPECT_NEAR(e1, 0.0, 3 * std::sqrt(1.0 / n));
  EXPECT_NEAR(e2 - e1 * e1, 1.0, 3 * std::sqrt(2.0 / n));
}

TEST(TreeSampler, RespectsMinimumLeafSizeAndDesign) {
  Rng rng(17);
  const DesignMatrix x = random_design(60, 3, rng, 0.2);
  std::vector<std::size_t> rows(x.rows());
  std::vector<double> counts(x.rows(), 1.0), sums(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = i;
    sums[i] = (x(i, 0) > 0.5 ? 2.0 : -2.0) + rng.normal(0.0, 0.1);
  }
  ForestUnits units{&x, rows, counts, sums};
  TreeSamplerSettings s;
  s.min_leaf_size = 5;
  TreeSampler sampler;
  Tree t;
  for (int it = 0; it < 500; ++it) {
    sampler.step(t, units, 0.05, s, rng);
    EXPECT_LT(t.max_feature(), 3);
    const auto stats = sampler.leaf_stats(t, units);
    if (t.is_stump()) continue;
    for (int leaf : t.leaf_nodes()) EXPECT_GE(stats[leaf].units, 5u);
  }
}

TEST(TreeJson, RoundTripPreservesStructureAndValues) {
  Rng rng(31);
  const DesignMatrix x = random_design(80, 3, rng, 0.1);
  for (int rep = 0; rep < 20; ++rep) {
    Tree t = random_tree(x, rng, 5);
    for (int leaf : t.leaf_nodes()) t.set_leaf_value(leaf, rng.normal());
    const Tree back = tree_from_json(tree_to_json(t));
    EXPECT_TRUE(back == t);
    for (std::size_t r = 0; r < x.rows(); ++r)
      ASSERT_EQ(back.node(back.leaf_for(x, r)).leaf_value, t.node(t.leaf_for(x, r)).leaf_value);
  }
}

TEST(TreeJson, TruncatedRecordsAreRejected) {
  const auto j = tree_to_json(one_split());
  nlohmann::json cut = nlohmann::json::array();
  cut.push_back(j[0]);
  EXPECT_THROW(tree_from_json(cut), StructureError);
}
