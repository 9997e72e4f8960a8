#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lbcf/panel.h"

namespace lbcf {

// Two-wave Friedman-style benchmark. x1..x10 ~ U(0,1) enter at wave 1 and
// x11..x20 = x1..x10 + U(0, 0.4) at wave 2.
struct Dgp1Options {
  std::size_t n_train = 500;
  std::size_t n_test = 1000;
  double sigma = 1.0;
  bool null_effect = false;  // tau == 0 everywhere
  std::uint64_t seed = 1;
};

struct Dgp1Truth {
  std::vector<double> mu, delta, tau, propensity;
};

struct Dgp1Instance {
  PanelDataset train;
  PanelDataset test;
  Dgp1Truth train_truth;
  Dgp1Truth test_truth;
};

// `x` holds x1..x20 (0-based).
double dgp1_mu(std::span<const double> x);
double dgp1_delta(std::span<const double> x);
double dgp1_tau(std::span<const double> x);

Dgp1Instance gen_dgp1(const Dgp1Options& opt);

// Three-wave time-varying confounding design. L_t and A_t for t = 1..3 with
// L_0 = A_0 = 0; the model treats A_2, A_3 as z.2, z.3 and A_1 as a baseline
// covariate.
struct Dgp2Options {
  std::size_t n = 500;
  std::uint64_t seed = 1;
  double noise = 1.0;        // scales every N(., 1) disturbance, including U
  int force_treatment = -1;  // 0 or 1 pins every A_t; -1 draws them
};

struct Dgp2Instance {
  PanelDataset data;
  std::vector<double> ate;  // direct effect per wave 2..T (all 1)
  std::vector<std::vector<double>> propensity;  // true P(A_t = 1), waves 2..T
  std::vector<double> baseline_treatment;  // A_1 per subject
};

Dgp2Instance gen_dgp2(const Dgp2Options& opt);

}  // namespace lbcf
