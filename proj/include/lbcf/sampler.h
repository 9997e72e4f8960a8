#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbcf/model_schema.h"
#include "lbcf/panel.h"
#include "lbcf/propensity.h"
#include "lbcf/proposal.h"
#include "lbcf/rng.h"
#include "lbcf/tree.h"

namespace lbcf {

struct HyperParams {
  int n_mu = 100;
  int n_delta = 70;
  int n_tau = 30;
  double alpha_mu = 0.95, beta_mu = 2.0;
  double alpha_delta = 0.95, beta_delta = 2.0;
  double alpha_tau = 0.25, beta_tau = 3.0;
  // Leaf-prior variances; a value <= 0 means "derive from the tree count"
  // (1/n_mu, 1/n_delta, 0.25/n_tau).
  double sigma2_mu = 0.0;
  double sigma2_delta = 0.0;
  double sigma2_tau = 0.0;
  double nu = 3.0;
  double lambda = 0.1;
  int n_burn = 500;
  int n_save = 500;
  std::uint64_t seed = 1;

  HyperParams resolved() const;
  void validate() const;  // throws ValidationError
  bool operator==(const HyperParams&) const = default;
};

nlohmann::json to_json(const HyperParams& hp);
HyperParams hyper_from_json(const nlohmann::json& j, HyperParams base = {});

struct FitOptions {
  PropensityMethod propensity_method = PropensityMethod::ProbitForest;
  ProbitForestSettings probit;
  // Refuse to fit when some wave has only treated or only untreated subjects.
  bool require_overlap = true;
  // Keep every tau tree a zero stump (growth-only model).
  bool freeze_tau = false;
  bool store_forests = true;
  // Recompute residuals from scratch after every tree update and record the
  // largest discrepancy. Expensive; meant for tests.
  bool check_invariants = false;
  std::size_t min_leaf_size = 5;
  MoveProbabilities moves;
  int chain = 0;
  // Optional held-out rows scored at every saved draw.
  const PanelDataset* test = nullptr;
  std::function<void(int chain, int iter, int total)> progress;
};

struct BlockDiagnostics {
  std::string label;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
};

struct ChainInfo {
  int chain = 0;
  int replicate = -1;  // plausible-value index, -1 when fit on the base outcome
  std::uint64_t seed = 0;
  Standardizer standardizer;
  std::vector<PropensityModel> propensity;  // waves 2..T
  std::vector<std::vector<double>> propensity_scores;  // training scores, waves 2..T
  std::vector<BlockDiagnostics> blocks;
  double max_residual_drift = 0.0;   // standardized scale, check_invariants only
  double max_identity_error = 0.0;   // standardized scale, check_invariants only
};

// One saved iteration. Fits are on the original outcome scale; delta/tau are
// indexed [w - 2][subject].
struct Draw {
  int chain = 0;
  int iter = 0;
  double sigma2 = 0.0;  // standardized scale
  std::vector<double> mu;
  std::vector<std::vector<double>> delta;
  std::vector<std::vector<double>> tau;
  std::vector<std::vector<std::int8_t>> z;  // [w - 2][subject], imputed where missing
  std::vector<std::vector<Tree>> forests;   // schema block order; empty unless stored
  std::vector<double> test_mu;
  std::vector<std::vector<double>> test_delta;
  std::vector<std::vector<double>> test_tau;
};

struct PosteriorDraws {
  HyperParams hp;
  nlohmann::json config = nlohmann::json::object();
  ModelSchema schema;
  int waves = 0;
  std::vector<std::string> ids;
  std::vector<double> weights;
  std::vector<int> last_wave;
  std::vector<ChainInfo> chains;
  std::vector<Draw> draws;

  const ChainInfo& chain_info(int chain) const;
  // Composed fitted value mu + sum_{w<=t}(delta_w + tau_w z_w) for subject i.
  double fitted(const Draw& d, std::size_t i, int t) const;
};

struct InverseGamma {
  double shape = 1.0;
  double scale = 1.0;
  double mean() const { return shape > 1.0 ? scale / (shape - 1.0) : INFINITY; }
};

// Conjugate posterior of sigma^2 given N residuals with sum of squares ssr.
InverseGamma sigma2_posterior(double nu, double lambda, std::size_t n, double ssr);
double draw_inverse_gamma(const InverseGamma& ig, Rng& rng);
double update_sigma2(std::span<const double> residuals, double nu, double lambda, Rng& rng);

// P(Z = 1 | rest) for one missing treatment. `residuals` are the subject's
// residuals with the treatment term removed (y - mu - delta - ...) at every
// observed wave the treatment affects.
double missing_treatment_probability(double prior, double sigma2, std::span<const double> residuals,
                                     double tau);
std::int8_t impute_missing_treatment(double prior, double sigma2, std::span<const double> residuals,
                                     double tau, Rng& rng);

// Runs one chain. Throws EstimationRefused on overlap violations and
// ValidationError on bad input.
PosteriorDraws fit(const PanelDataset& data, const HyperParams& hp, const FitOptions& options = {});

// One chain per plausible value (or `chains` copies of the base outcome when
// there are none), run on up to `threads` workers and pooled in chain order.
PosteriorDraws fit_chains(const PanelDataset& data, const HyperParams& hp, const FitOptions& options,
                          int chains = 1, int threads = 1);

// Concatenates chains. Throws SchemaError when layouts, subjects or
// hyperparameters (other than seed) differ.
PosteriorDraws pool_chains(std::vector<PosteriorDraws> parts);

struct Prediction {
  // [draw][row] and [draw][w - 2][row], original scale.
  std::vector<std::vector<double>> mu;
  std::vector<std::vector<std::vector<double>>> delta;
  std::vector<std::vector<std::vector<double>>> tau;
  // [draw][t - 1][row]; NaN where a needed treatment is missing in newdata.
  std::vector<std::vector<std::vector<double>>> yhat;
};

// Evaluates every stored forest on `newdata`. Requires forests in `draws`.
Prediction predict(const PosteriorDraws& draws, const PanelDataset& newdata,
                   std::vector<std::string>* warnings = nullptr);

}  // namespace lbcf
