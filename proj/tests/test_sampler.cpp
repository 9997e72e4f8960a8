#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "lbcf/analysis.h"
#include "lbcf/dgp.h"
#include "lbcf/draws_io.h"
#include "lbcf/errors.h"
#include "lbcf/sampler.h"
#include "test_util.h"

using namespace lbcf;

namespace {

HyperParams small_hp(std::uint64_t seed = 3) {
  HyperParams hp;
  hp.n_mu = 20;
  hp.n_delta = 12;
  hp.n_tau = 6;
  hp.n_burn = 60;
  hp.n_save = 40;
  hp.seed = seed;
  return hp;
}

PanelDataset small_dgp1(std::uint64_t seed, std::size_t n = 120) {
  Dgp1Options o;
  o.n_train = n;
  o.n_test = 0;
  o.seed = seed;
  return gen_dgp1(o).train;
}

FitOptions quick_options() {
  FitOptions o;
  o.propensity_method = PropensityMethod::Logistic;
  return o;
}

std::string serialize(const PosteriorDraws& d) {
  std::ostringstream s;
  write_draws(s, d);
  return s.str();
}

// Subject-level constant outcome over three waves with no one treated.
PanelDataset untreated_panel(std::size_t n, Rng& rng) {
  std::ostringstream csv;
  csv << "id,y.1,y.2,y.3,z.2,z.3,x.a.1\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform();
    const double y = 2.0 + 3.0 * a;
    csv << "s" << i << ',' << y << ',' << y << ',' << y << ",0,0," << a << '\n';
  }
  return panel_from_text(csv.str());
}

}  // namespace

TEST(Sigma2, ConjugateExamples) {
  const InverseGamma prior = sigma2_posterior(3.0, 0.1, 0, 0.0);
  EXPECT_DOUBLE_EQ(prior.shape, 1.5);
  EXPECT_NEAR(prior.scale, 0.15, 1e-15);
  const InverseGamma post = sigma2_posterior(3.0, 0.1, 100, 80.0);
  EXPECT_DOUBLE_EQ(post.shape, 51.5);
  EXPECT_NEAR(post.scale, 40.15, 1e-12);
  EXPECT_NEAR(post.mean(), 0.795049504950495, 1e-12);
}

TEST(Sigma2, DrawsArePositiveAndMatchMoments) {
  Rng rng(7);
  std::vector<double> resid(100);
  for (auto& r : resid) r = rng.normal(0.0, 0.9);
  double ssr = 0.0;
  for (double r : resid) ssr += r * r;
  const InverseGamma ig = sigma2_posterior(3.0, 0.1, resid.size(), ssr);
  const double mean = ig.mean();
  const double var = ig.scale * ig.scale / ((ig.shape - 1) * (ig.shape - 1) * (ig.shape - 2));
  const int n = 20000;
  double m = 0.0;
  for (int k = 0; k < n; ++k) {
    const double s = update_sigma2(resid, 3.0, 0.1, rng);
    ASSERT_GT(s, 0.0);
    m += s;
  }
  EXPECT_NEAR(m / n, mean, 3.0 * std::sqrt(var / n));
}

TEST(Sigma2, VanishingResidualsConcentrateNearZero) {
  Rng rng(8);
  const std::vector<double> resid(5000, 0.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) worst = std::max(worst, update_sigma2(resid, 3.0, 0.1, rng));
  EXPECT_GT(worst, 0.0);
  EXPECT_LT(worst, 1e-3);
}

TEST(MissingTreatment, HandEvaluatedExamples) {
  const double one[] = {1.0}, zero[] = {0.0};
  EXPECT_NEAR(missing_treatment_probability(0.5, 1.0, one, 1.0), 0.6224593312018546, 1e-12);
  EXPECT_NEAR(missing_treatment_probability(0.2, 1.0, zero, 1.0), 0.13166756166786703, 1e-12);
}

TEST(MissingTreatment, ZeroEffectReturnsThePrior) {
  const double r[] = {3.0, -2.0};
  for (double p : {0.001, 0.2, 0.5, 0.999}) EXPECT_EQ(missing_treatment_probability(p, 0.7, r, 0.0), p);
}

TEST(MissingTreatment, ExtremeEvidenceStaysFinite) {
  const double r[] = {1e3, 1e3};
  const double hi = missing_treatment_probability(0.001, 1e-3, r, 50.0);
  const double lo = missing_treatment_probability(0.999, 1e-3, r, -50.0);
  EXPECT_TRUE(std::isfinite(hi));
  EXPECT_TRUE(std::isfinite(lo));
  EXPECT_NEAR(hi, 1.0, 1e-12);
  EXPECT_NEAR(lo, 0.0, 1e-12);
}

TEST(MissingTreatment, ImputationFrequencyMatches) {
  Rng rng(12);
  const double r[] = {0.4, 0.9};
  const double p = missing_treatment_probability(0.3, 0.8, r, 0.6);
  const int n = 20000;
  int ones = 0;
  for (int k = 0; k < n; ++k) ones += impute_missing_treatment(0.3, 0.8, r, 0.6, rng);
  EXPECT_NEAR(static_cast<double>(ones) / n, p, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(HyperParams, DefaultsResolveLeafVariances) {
  const HyperParams r = HyperParams{}.resolved();
  EXPECT_DOUBLE_EQ(r.sigma2_mu, 1.0 / 100);
  EXPECT_DOUBLE_EQ(r.sigma2_delta, 1.0 / 70);
  EXPECT_DOUBLE_EQ(r.sigma2_tau, 0.25 / 30);
  EXPECT_EQ(hyper_from_json(to_json(r)), r);
}

TEST(HyperParams, InvalidValuesAndKeysAreRejected) {
  HyperParams hp;
  hp.n_mu = 0;
  EXPECT_THROW(hp.validate(), ValidationError);
  hp = HyperParams{};
  hp.alpha_tau = 1.5;
  EXPECT_THROW(hp.validate(), ValidationError);
  EXPECT_THROW(hyper_from_json(nlohmann::json{{"n_trees", 3}}), ValidationError);
}

TEST(Fit, ResidualBookkeepingAndFittedIdentityHold) {
  PanelDataset data = small_dgp1(5, 80);
  FitOptions o = quick_options();
  o.check_invariants = true;
  const PosteriorDraws d = fit(data, small_hp(), o);
  ASSERT_EQ(d.draws.size(), 40u);
  EXPECT_LT(d.chains[0].max_residual_drift, 1e-8);
  EXPECT_LT(d.chains[0].max_identity_error, 1e-8);
}

TEST(Fit, SameSeedIsBitIdentical) {
  const PanelDataset data = small_dgp1(6, 80);
  const std::string a = serialize(fit(data, small_hp(9), quick_options()));
  const std::string b = serialize(fit(data, small_hp(9), quick_options()));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, serialize(fit(data, small_hp(10), quick_options())));
}

TEST(Fit, ChainResultsDoNotDependOnThreadCount) {
  const PanelDataset data = small_dgp1(7, 60);
  HyperParams hp = small_hp();
  hp.n_save = 10;
  const std::string one = serialize(fit_chains(data, hp, quick_options(), 3, 1));
  const std::string three = serialize(fit_chains(data, hp, quick_options(), 3, 3));
  EXPECT_EQ(one, three);
}

TEST(Fit, OverlapViolationIsRefused) {
  PanelDataset data = small_dgp1(8, 40);
  for (std::size_t i = 0; i < data.subjects(); ++i) data.z[i * data.waves + 1] = 1;
  try {
    fit(data, small_hp(), quick_options());
    FAIL() << "expected EstimationRefused";
  } catch (const EstimationRefused& e) {
    EXPECT_EQ(e.wave(), 2);
  }
}

TEST(Fit, UntreatedPanelLeavesTauAtThePrior) {
  Rng rng(4);
  const PanelDataset data = untreated_panel(60, rng);
  HyperParams hp = small_hp();
  hp.n_save = 400;
  FitOptions o = quick_options();
  o.require_overlap = false;
  const PosteriorDraws d = fit(data, hp, o);
  const double sd = d.chains[0].standardizer.sd;
  // Each tau is a sum of n_tau prior leaf draws: N(0, 0.25) on the standardized scale.
  double m = 0.0, m2 = 0.0;
  for (const auto& dr : d.draws) m += dr.tau[0][0], m2 += dr.tau[0][0] * dr.tau[0][0];
  const double n = static_cast<double>(d.draws.size());
  m /= n;
  const double var = m2 / n - m * m;
  EXPECT_NEAR(m, 0.0, 4.0 * 0.5 * sd / std::sqrt(n));
  EXPECT_NEAR(var / (0.25 * sd * sd), 1.0, 0.25);

  const EffectSummary s = summarize_effects(d);
  for (const auto& we : s.waves) {
    EXPECT_LT(we.ate_interval.lo, 0.0);
    EXPECT_GT(we.ate_interval.hi, 0.0);
  }
  // mu + delta recovers the constant outcome within two posterior SDs.
  for (std::size_t i = 0; i < data.subjects(); i += 7) {
    std::vector<double> fit3;
    for (const auto& dr : d.draws) fit3.push_back(dr.mu[i] + dr.delta[0][i] + dr.delta[1][i]);
    double fm = 0, fv = 0;
    for (double v : fit3) fm += v;
    fm /= fit3.size();
    for (double v : fit3) fv += (v - fm) * (v - fm);
    const double fsd = std::sqrt(fv / (fit3.size() - 1));
    EXPECT_LT(std::abs(fm - data.outcome(i, 3)), 2.0 * fsd + 0.05 * sd) << "subject " << i;
  }
}

TEST(Fit, FrozenTauMatchesUnfrozenWhenNobodyIsTreated) {
  Rng rng(6);
  const PanelDataset data = untreated_panel(40, rng);
  FitOptions o = quick_options();
  o.require_overlap = false;
  const PosteriorDraws a = fit(data, small_hp(), o);
  o.freeze_tau = true;
  const PosteriorDraws b = fit(data, small_hp(), o);
  ASSERT_EQ(a.draws.size(), b.draws.size());
  for (std::size_t k = 0; k < a.draws.size(); ++k)
    for (std::size_t i = 0; i < data.subjects(); ++i)
      for (int t = 1; t <= data.waves; ++t)
        ASSERT_EQ(a.fitted(a.draws[k], i, t), b.fitted(b.draws[k], i, t));
  for (const auto& dr : b.draws)
    for (const auto& tau : dr.tau)
      for (double v : tau) ASSERT_EQ(v, 0.0);
}

TEST(Fit, NoiselessOutcomeDrivesSigma2Down) {
  Rng rng(14);
  std::ostringstream csv;
  csv << "id,y.1,y.2,z.2,x.a.1\n";
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform();
    csv << i << ',' << (a > 0.5 ? 4 : 0) << ',' << (a > 0.5 ? 6 : 1) + (i % 2) << ',' << (i % 2) << ',' << a << '\n';
  }
  HyperParams hp = small_hp();
  hp.n_burn = 300;
  const PosteriorDraws d = fit(panel_from_text(csv.str()), hp, quick_options());
  double early = 0.0, late = 0.0;
  const std::size_t h = d.draws.size() / 2;
  for (std::size_t k = 0; k < h; ++k) early += d.draws[k].sigma2;
  for (std::size_t k = h; k < d.draws.size(); ++k) late += d.draws[k].sigma2;
  EXPECT_LT(late / h, 0.05);
  for (const auto& dr : d.draws) EXPECT_GT(dr.sigma2, 0.0);
}

TEST(Fit, MissingTreatmentsAreImputed) {
  PanelDataset data = small_dgp1(15, 80);
  std::vector<std::size_t> hidden;
  for (std::size_t i = 0; i < data.subjects(); i += 9) {
    data.z[i * data.waves + 1] = kMissingTreatment;
    hidden.push_back(i);
  }
  const PosteriorDraws d = fit(data, small_hp(), quick_options());
  for (std::size_t i : hidden) {
    int ones = 0;
    for (const auto& dr : d.draws) {
      const auto z = dr.z[0][i];
      ASSERT_TRUE(z == 0 || z == 1);
      ones += z;
    }
    (void)ones;
  }
  for (const auto& dr : d.draws)
    for (std::size_t i = 1; i < data.subjects(); i += 9) ASSERT_EQ(dr.z[0][i], data.treatment(i, 2));
}

TEST(Fit, WaveOneOnlySubjectIsExcludedFromGrowthAverages) {
  PanelDataset data = small_dgp1(16, 60);
  data.y[0 * data.waves + 1] = kMissing;  // subject 0 drops out after wave 1
  data.z[0 * data.waves + 1] = kMissingTreatment;
  const PosteriorDraws d = fit(data, small_hp(), quick_options());
  EXPECT_EQ(d.last_wave[0], 1);
  const auto ate = ate_posterior(d, 2);
  for (std::size_t k = 0; k < d.draws.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 1; i < data.subjects(); ++i) s += d.draws[k].tau[0][i];
    EXPECT_NEAR(ate[k], s / (data.subjects() - 1), 1e-12);
  }
}

TEST(Predict, TrainingDataReproducesStoredFitsBitwise) {
  const PanelDataset data = small_dgp1(17, 70);
  const PosteriorDraws d = fit(data, small_hp(), quick_options());
  const Prediction p = predict(d, data);
  for (std::size_t k = 0; k < d.draws.size(); ++k) {
    for (std::size_t i = 0; i < data.subjects(); ++i) {
      ASSERT_EQ(p.mu[k][i], d.draws[k].mu[i]);
      ASSERT_EQ(p.delta[k][0][i], d.draws[k].delta[0][i]);
      ASSERT_EQ(p.tau[k][0][i], d.draws[k].tau[0][i]);
      for (int t = 1; t <= 2; ++t) ASSERT_EQ(p.yhat[k][t - 1][i], d.fitted(d.draws[k], i, t));
    }
  }
}

TEST(Predict, GrowthIdentityAndMissingTreatment) {
  const PanelDataset data = small_dgp1(18, 60);
  const PosteriorDraws d = fit(data, small_hp(), quick_options());
  PanelDataset fresh = small_dgp1(19, 30);
  fresh.z[3 * fresh.waves + 1] = kMissingTreatment;
  const Prediction p = predict(d, fresh);
  for (std::size_t k = 0; k < d.draws.size(); ++k) {
    for (std::size_t i = 0; i < fresh.subjects(); ++i) {
      if (i == 3) {
        EXPECT_TRUE(std::isnan(p.yhat[k][1][i]));
        continue;
      }
      const double step = p.yhat[k][1][i] - p.yhat[k][0][i];
      EXPECT_NEAR(step, p.delta[k][0][i] + p.tau[k][0][i] * fresh.treatment(i, 2), 1e-9);
    }
  }
}

TEST(Predict, StumpForestsGiveTheTrainingMean) {
  const PanelDataset data = small_dgp1(20, 50);
  PosteriorDraws d = fit(data, small_hp(), quick_options());
  for (auto& dr : d.draws)
    for (auto& forest : dr.forests)
      for (auto& t : forest) t = Tree{};
  const Prediction p = predict(d, data);
  double mean = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.subjects(); ++i)
    for (int t = 1; t <= data.waves; ++t)
      if (data.observed(i, t)) mean += data.outcome(i, t), ++n;
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < data.subjects(); ++i) {
    EXPECT_NEAR(p.mu[0][i], mean, 1e-9);
    EXPECT_EQ(p.delta[0][0][i], 0.0);
    EXPECT_EQ(p.tau[0][0][i], 0.0);
  }
}

TEST(Predict, RequiresStoredForests) {
  const PanelDataset data = small_dgp1(21, 40);
  FitOptions o = quick_options();
  o.store_forests = false;
  const PosteriorDraws d = fit(data, small_hp(), o);
  EXPECT_THROW(predict(d, data), ValidationError);
}

TEST(Pool, ConcatenatesAndChecksCompatibility) {
  const PanelDataset data = small_dgp1(22, 40);
  HyperParams hp = small_hp();
  hp.n_save = 10;
  std::vector<PosteriorDraws> parts;
  for (int c = 0; c < 5; ++c) {
    FitOptions o = quick_options();
    o.chain = c;
    parts.push_back(fit(data, hp, o));
  }
  const std::string single = serialize(parts[0]);
  EXPECT_EQ(serialize(pool_chains({parts[0]})), single);
  const PosteriorDraws pooled = pool_chains(parts);
  EXPECT_EQ(pooled.draws.size(), 50u);
  EXPECT_EQ(pooled.chains.size(), 5u);
  EXPECT_THROW(pool_chains({parts[0], parts[0]}), SchemaError);

  HyperParams other = hp;
  other.n_tau = 4;
  FitOptions o = quick_options();
  o.chain = 9;
  EXPECT_THROW(pool_chains({parts[0], fit(data, other, o)}), SchemaError);
}

TEST(Pool, PlausibleValuesGiveOneChainEach) {
  PanelDataset data = small_dgp1(23, 40);
  Rng rng(1);
  for (int k = 0; k < 5; ++k) {
    std::vector<double> pv = data.y;
    for (auto& v : pv)
      if (!std::isnan(v)) v += rng.normal(0.0, 0.3);
    data.plausible_values.push_back(pv);
  }
  HyperParams hp = small_hp();
  hp.n_save = 8;
  const PosteriorDraws d = fit_chains(data, hp, quick_options(), 1, 2);
  ASSERT_EQ(d.chains.size(), 5u);
  EXPECT_EQ(d.draws.size(), 40u);
  for (int c = 0; c < 5; ++c) EXPECT_EQ(d.chains[c].replicate, c + 1);  // pv.1 .. pv.5
}
