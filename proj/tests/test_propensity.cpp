#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "lbcf/dgp.h"
#include "lbcf/errors.h"
#include "lbcf/propensity.h"
#include "test_util.h"

using namespace lbcf;

namespace {

double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Plain Newton-Raphson for a one-covariate logistic model, written without
// the library's solver.
std::pair<double, double> reference_logistic(const std::vector<double>& l, const std::vector<std::int8_t>& z) {
  double b0 = 0.0, b1 = 0.0;
  for (int it = 0; it < 100; ++it) {
    double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      const double p = expit(b0 + b1 * l[i]);
      g0 += z[i] - p;
      g1 += (z[i] - p) * l[i];
      const double w = p * (1 - p);
      h00 += w, h01 += w * l[i], h11 += w * l[i] * l[i];
    }
    const double det = h00 * h11 - h01 * h01;
    const double d0 = (h11 * g0 - h01 * g1) / det, d1 = (h00 * g1 - h01 * g0) / det;
    b0 += d0, b1 += d1;
    if (std::abs(d0) + std::abs(d1) < 1e-13) break;
  }
  return {b0, b1};
}

DesignMatrix single_column(const std::vector<double>& v) {
  DesignMatrix x({"l"}, v.size());
  x.set_column(0, v);
  return x;
}

}  // namespace

TEST(Logistic, InterceptOnlyGivesTheSampleProportion) {
  std::vector<std::int8_t> z(100, 0);
  for (int i = 0; i < 30; ++i) z[i * 3] = 1;
  const DesignMatrix x({}, z.size());
  const PropensityEstimate e = estimate_propensity(x, z, PropensityMethod::Logistic, 2);
  for (double s : e.scores) EXPECT_NEAR(s, 0.3, 1e-10);
}

TEST(Logistic, RecoversExposureCoefficients) {
  Rng rng(2024);
  const std::size_t n = 5000;
  std::vector<double> l(n);
  std::vector<std::int8_t> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    l[i] = rng.normal(1.0, 1.4);
    z[i] = rng.bernoulli(expit(1.0 + 0.1 * l[i])) ? 1 : 0;
  }
  const PropensityModel m = fit_logistic(single_column(l), z, 2);
  const auto [b0, b1] = reference_logistic(l, z);
  EXPECT_NEAR(m.coefficients()[0], b0, 1e-8);
  EXPECT_NEAR(m.coefficients()[1], b1, 1e-8);
  EXPECT_NEAR(m.coefficients()[0], 1.0, 3 * m.standard_errors()[0]);
  EXPECT_NEAR(m.coefficients()[1], 0.1, 3 * m.standard_errors()[1]);
}

TEST(Logistic, ScoresAreInvariantToRowOrder) {
  Rng rng(5);
  const std::size_t n = 300;
  std::vector<double> l(n);
  std::vector<std::int8_t> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    l[i] = rng.normal();
    z[i] = rng.bernoulli(expit(0.5 * l[i])) ? 1 : 0;
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  std::vector<double> lp(n);
  std::vector<std::int8_t> zp(n);
  for (std::size_t i = 0; i < n; ++i) lp[i] = l[perm[i]], zp[i] = z[perm[i]];
  const auto a = estimate_propensity(single_column(l), z, PropensityMethod::Logistic, 2).scores;
  const auto b = estimate_propensity(single_column(lp), zp, PropensityMethod::Logistic, 2).scores;
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(b[i], a[perm[i]], 1e-10);
}

TEST(Logistic, MissingCellsAreMeanImputedAndRowsStillScored) {
  std::vector<double> l{0.1, 0.5, kMissing, 0.9, 0.3, 0.7, kMissing, 0.2};
  std::vector<std::int8_t> z{0, 1, 1, 1, 0, kMissingTreatment, 0, 0};
  const auto e = estimate_propensity(single_column(l), z, PropensityMethod::Logistic, 2);
  ASSERT_EQ(e.scores.size(), l.size());
  for (double s : e.scores) {
    EXPECT_GE(s, kPropensityFloor);
    EXPECT_LE(s, kPropensityCeiling);
  }
  EXPECT_EQ(e.scores[2], e.scores[6]);
}

TEST(Logistic, ConstantTreatmentIsRefused) {
  const std::vector<std::int8_t> z(10, 1);
  EXPECT_THROW(fit_logistic(DesignMatrix({}, 10), z, 3), EstimationRefused);
}

TEST(ProbitForest, TracksTheTrueScore) {
  Rng rng(9);
  const std::size_t n = 400;
  std::vector<double> l(n), truth(n);
  std::vector<std::int8_t> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    l[i] = rng.uniform();
    truth[i] = l[i] < 0.5 ? 0.2 : 0.8;
    z[i] = rng.bernoulli(truth[i]) ? 1 : 0;
  }
  const auto e = estimate_propensity(single_column(l), z, PropensityMethod::ProbitForest, 2, {}, 4);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err += std::abs(e.scores[i] - truth[i]);
  EXPECT_LT(err / n, 0.1);
}

TEST(ProbitForest, ModelRoundTripsThroughJson) {
  Rng rng(10);
  std::vector<double> l(100);
  std::vector<std::int8_t> z(100);
  for (std::size_t i = 0; i < 100; ++i) l[i] = rng.uniform(), z[i] = rng.bernoulli(l[i]);
  ProbitForestSettings s;
  s.n_trees = 10;
  s.n_burn = 20;
  s.n_save = 10;
  const DesignMatrix x = single_column(l);
  const PropensityModel m = fit_probit_forest(x, z, 2, s, 3);
  const PropensityModel back = PropensityModel::from_json(m.to_json());
  EXPECT_EQ(back.score(x), m.score(x));
}

TEST(Supplied, ScoresPassThroughUnchanged) {
  Dgp1Options o;
  o.n_train = 200;
  o.n_test = 0;
  const Dgp1Instance d = gen_dgp1(o);
  const auto& ps = d.train.supplied_propensity.at(2);
  const PropensityEstimate e = supplied_propensity(2, ps);
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(e.scores[i], clip_propensity(ps[i]));
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i] >= kPropensityFloor && ps[i] <= kPropensityCeiling) EXPECT_EQ(e.scores[i], ps[i]);
}

TEST(Supplied, OutOfRangeScoresAreRejected) {
  const std::vector<double> bad{0.5, 1.0};
  EXPECT_THROW(supplied_propensity(2, bad), ValidationError);
  const std::vector<double> nan{0.5, NAN};
  EXPECT_THROW(supplied_propensity(2, nan), ValidationError);
}

TEST(Clip, BoundsAreEnforced) {
  EXPECT_EQ(clip_propensity(0.0), kPropensityFloor);
  EXPECT_EQ(clip_propensity(1.0), kPropensityCeiling);
  EXPECT_EQ(clip_propensity(0.4), 0.4);
}

TEST(NormalFunctions, QuantileInvertsCdf) {
  for (double p : {1e-8, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12 + 1e-9 * p);
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-9);
}

TEST(Scores, CsvHasSubjectIdAndScore) {
  const std::vector<std::string> ids{"a", "b"};
  PropensityEstimate e;
  e.scores = {0.25, 0.5};
  std::ostringstream out;
  write_scores_csv(out, ids, e);
  EXPECT_EQ(out.str(), "subject_id,score\na,0.25\nb,0.5\n");
}
