#include "lbcf/dgp.h"

#include <cmath>
#include <numbers>
#include <string>

#include "lbcf/design_matrix.h"
#include "lbcf/rng.h"

namespace lbcf {

double dgp1_mu(std::span<const double> x) {
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
         10.0 * x[3] + 5.0 * x[4];
}

double dgp1_delta(std::span<const double> x) {
  return dgp1_mu(x) / 3.0 + 3.0 * x[10] * x[10] + 2.0 * x[14] * x[14];
}

double dgp1_tau(std::span<const double> x) {
  return -x[3] - x[13] * x[13] - x[14] * x[14] * x[14];
}

namespace {

double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

PanelDataset empty_panel(std::size_t n, int waves, const std::string& prefix) {
  PanelDataset d;
  d.waves = waves;
  d.ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.ids[i] = prefix + std::to_string(i + 1);
  d.y.assign(n * waves, kMissing);
  d.z.assign(n * waves, kMissingTreatment);
  d.weights.assign(n, 1.0);
  return d;
}

Covariate numeric(const std::string& name, int wave, std::size_t n) {
  Covariate c;
  c.name = name;
  c.wave = wave;
  c.values.assign(n, 0.0);
  return c;
}

}  // namespace

Dgp1Instance gen_dgp1(const Dgp1Options& opt) {
  const std::size_t n = opt.n_train + opt.n_test;
  Rng rng(opt.seed, 0xd91);
  std::vector<std::vector<double>> x(n, std::vector<double>(20));
  for (auto& row : x) {
    for (int j = 0; j < 10; ++j) row[j] = rng.uniform();
    for (int j = 0; j < 10; ++j) row[10 + j] = row[j] + 0.4 * rng.uniform();
  }
  std::vector<double> mu(n), delta(n), tau(n), v(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = dgp1_mu(x[i]);
    delta[i] = dgp1_delta(x[i]);
    tau[i] = opt.null_effect ? 0.0 : dgp1_tau(x[i]);
    v[i] = mu[i] + delta[i];
    mean += v[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 1.0;

  Dgp1Instance out;
  auto fill = [&](PanelDataset& d, Dgp1Truth& truth, std::size_t begin, std::size_t count,
                  const std::string& prefix) {
    d = empty_panel(count, 2, prefix);
    for (int j = 0; j < 20; ++j)
      d.covariates.push_back(numeric("x" + std::to_string(j + 1), j < 10 ? 1 : 2, count));
    auto& ps = d.supplied_propensity[2];
    ps.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = begin + k;
      for (int j = 0; j < 20; ++j) d.covariates[j].values[k] = x[i][j];
      const double p = expit((v[i] - mean) / sd);
      const int z = rng.bernoulli(p) ? 1 : 0;
      d.z[k * 2 + 1] = static_cast<std::int8_t>(z);
      d.y[k * 2] = mu[i] + opt.sigma * rng.normal();
      d.y[k * 2 + 1] = mu[i] + delta[i] + tau[i] * z + opt.sigma * rng.normal();
      ps[k] = p;
      truth.mu.push_back(mu[i]);
      truth.delta.push_back(delta[i]);
      truth.tau.push_back(tau[i]);
      truth.propensity.push_back(p);
    }
  };
  fill(out.train, out.train_truth, 0, opt.n_train, "");
  fill(out.test, out.test_truth, opt.n_train, opt.n_test, "t");
  return out;
}

Dgp2Instance gen_dgp2(const Dgp2Options& opt) {
  constexpr int kWaves = 3;
  constexpr double kGamma[kWaves] = {0.0, 0.5, 0.5};  // lag coefficients gamma_1..gamma_3
  const std::size_t n = opt.n;
  Rng rng(opt.seed, 0xd92);
  Dgp2Instance out;
  PanelDataset& d = out.data;
  d = empty_panel(n, kWaves, "");
  d.covariates.push_back(numeric("u", 1, n));
  d.covariates.push_back(numeric("l", 1, n));
  d.covariates.push_back(numeric("a", 1, n));
  d.covariates.push_back(numeric("l", 2, n));
  d.covariates.push_back(numeric("l", 3, n));
  out.propensity.assign(kWaves - 1, std::vector<double>(n));
  out.baseline_treatment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = opt.noise * rng.normal();
    double l_prev = 0.0, a_prev = 0.0, l_sum = 0.0;
    for (int t = 1; t <= kWaves; ++t) {
      const double l = 1.0 + l_prev + 0.5 * a_prev + u + opt.noise * rng.normal();
      const double p = expit(1.0 + 0.1 * l + 0.1 * a_prev);
      const bool draw = rng.bernoulli(p);
      const double a = opt.force_treatment >= 0 ? opt.force_treatment : (draw ? 1.0 : 0.0);
      l_sum += l;
      const double lag = t > 1 ? kGamma[t - 2] * a_prev : 0.0;
      const double y = 1.0 + a + lag + l_sum + u + opt.noise * rng.normal();
      d.y[i * kWaves + (t - 1)] = y;
      if (t == 1) {
        d.covariates[0].values[i] = u;
        d.covariates[1].values[i] = l;
        d.covariates[2].values[i] = a;
        out.baseline_treatment[i] = a;
      } else {
        d.covariates[2 + t - 1].values[i] = l;
        d.z[i * kWaves + (t - 1)] = static_cast<std::int8_t>(a);
        out.propensity[t - 2][i] = p;
      }
      l_prev = l;
      a_prev = a;
    }
  }
  for (int w = 2; w <= kWaves; ++w) d.supplied_propensity[w] = out.propensity[w - 2];
  out.ate.assign(kWaves - 1, 1.0);
  return out;
}

}  // namespace lbcf
