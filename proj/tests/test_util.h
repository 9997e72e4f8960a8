#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lbcf/design_matrix.h"
#include "lbcf/panel.h"
#include "lbcf/rng.h"
#include "lbcf/tree.h"

namespace lbcf {

inline DesignMatrix random_design(std::size_t rows, std::size_t cols, Rng& rng, double missing) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c));
  DesignMatrix x(names, rows);
  std::vector<double> v(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (auto& e : v) e = rng.uniform() < missing ? kMissing : rng.uniform();
    x.set_column(c, v);
  }
  return x;
}

// Random tree with split values drawn from the design, up to `max_leaves`.
inline Tree random_tree(const DesignMatrix& x, Rng& rng, std::size_t max_leaves) {
  Tree t;
  const std::size_t target = 1 + rng.index(max_leaves);
  while (t.num_leaves() < target) {
    const auto leaves = t.leaf_nodes();
    const int leaf = leaves[rng.index(leaves.size())];
    const auto f = static_cast<std::int32_t>(rng.index(x.cols()));
    double v = x(rng.index(x.rows()), f);
    if (is_missing(v)) v = 0.5;
    t.grow(leaf, SplitRule{f, v, rng.bernoulli(0.5) ? Direction::Left : Direction::Right});
  }
  return t;
}

// log of the integral over m of prod_j N(r_j | m, sigma2) N(m | 0, tau2) by
// composite Simpson on a wide grid.
inline double quadrature_log_marginal(const std::vector<double>& r, double sigma2, double tau2) {
  auto log_f = [&](double m) {
    double s = -0.5 * std::log(2 * std::numbers::pi * tau2) - m * m / (2 * tau2);
    for (double v : r) s += -0.5 * std::log(2 * std::numbers::pi * sigma2) - (v - m) * (v - m) / (2 * sigma2);
    return s;
  };
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  const double half = std::abs(mean) + 14.0 * std::sqrt(std::max(sigma2, tau2));
  const double lo = -half, hi = half;
  const int n = 40000;
  const double h = (hi - lo) / n;
  double peak = -INFINITY;
  for (int k = 0; k <= n; ++k) peak = std::max(peak, log_f(lo + k * h));
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * std::exp(log_f(lo + k * h) - peak);
  }
  return peak + std::log(acc * h / 3.0);
}

inline PanelDataset panel_from_text(const std::string& text, const SchemaSpec& spec = {}) {
  std::istringstream in(text);
  return parse_panel(in, spec);
}

}  // namespace lbcf
