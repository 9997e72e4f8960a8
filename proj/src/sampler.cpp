#include "lbcf/sampler.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "lbcf/errors.h"
#include "lbcf/tree_sampler.h"

namespace lbcf {

HyperParams HyperParams::resolved() const {
  HyperParams h = *this;
  if (h.sigma2_mu <= 0.0 && h.n_mu > 0) h.sigma2_mu = 1.0 / h.n_mu;
  if (h.sigma2_delta <= 0.0 && h.n_delta > 0) h.sigma2_delta = 1.0 / h.n_delta;
  if (h.sigma2_tau <= 0.0 && h.n_tau > 0) h.sigma2_tau = 0.25 / h.n_tau;
  return h;
}

void HyperParams::validate() const {
  if (n_mu <= 0 || n_delta <= 0 || n_tau <= 0)
    throw ValidationError("tree counts n_mu, n_delta, n_tau must be positive");
  const HyperParams r = resolved();
  auto check_alpha = [](double a, const char* name) {
    if (!(a > 0.0 && a < 1.0)) throw ValidationError(std::string(name) + " must lie in (0,1)");
  };
  auto check_beta = [](double b, const char* name) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError(std::string(name) + " must be >= 0");
  };
  check_alpha(alpha_mu, "alpha_mu");
  check_alpha(alpha_delta, "alpha_delta");
  check_alpha(alpha_tau, "alpha_tau");
  check_beta(beta_mu, "beta_mu");
  check_beta(beta_delta, "beta_delta");
  check_beta(beta_tau, "beta_tau");
  for (double v : {r.sigma2_mu, r.sigma2_delta, r.sigma2_tau})
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("leaf variances must be positive");
  if (!(nu > 0.0) || !(lambda > 0.0)) throw ValidationError("nu and lambda must be positive");
  if (n_burn < 0 || n_save <= 0) throw ValidationError("need n_burn >= 0 and n_save > 0");
}

nlohmann::json to_json(const HyperParams& hp) {
  const HyperParams r = hp.resolved();
  return {{"n_mu", r.n_mu},
          {"n_delta", r.n_delta},
          {"n_tau", r.n_tau},
          {"alpha_mu", r.alpha_mu},
          {"beta_mu", r.beta_mu},
          {"alpha_delta", r.alpha_delta},
          {"beta_delta", r.beta_delta},
          {"alpha_tau", r.alpha_tau},
          {"beta_tau", r.beta_tau},
          {"sigma2_mu", r.sigma2_mu},
          {"sigma2_delta", r.sigma2_delta},
          {"sigma2_tau", r.sigma2_tau},
          {"nu", r.nu},
          {"lambda", r.lambda},
          {"n_burn", r.n_burn},
          {"n_save", r.n_save},
          {"seed", r.seed}};
}

HyperParams hyper_from_json(const nlohmann::json& j, HyperParams h) {
  static const char* known[] = {"n_mu",      "n_delta",    "n_tau",       "alpha_mu",
                                "beta_mu",   "alpha_delta", "beta_delta", "alpha_tau",
                                "beta_tau",  "sigma2_mu",  "sigma2_delta", "sigma2_tau",
                                "nu",        "lambda",     "n_burn",      "n_save",
                                "seed"};
  if (!j.is_object()) throw ValidationError("hyperparameters must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known))
      throw ValidationError("unknown hyperparameter '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("n_mu", h.n_mu);
  get("n_delta", h.n_delta);
  get("n_tau", h.n_tau);
  get("alpha_mu", h.alpha_mu);
  get("beta_mu", h.beta_mu);
  get("alpha_delta", h.alpha_delta);
  get("beta_delta", h.beta_delta);
  get("alpha_tau", h.alpha_tau);
  get("beta_tau", h.beta_tau);
  get("sigma2_mu", h.sigma2_mu);
  get("sigma2_delta", h.sigma2_delta);
  get("sigma2_tau", h.sigma2_tau);
  get("nu", h.nu);
  get("lambda", h.lambda);
  get("n_burn", h.n_burn);
  get("n_save", h.n_save);
  get("seed", h.seed);
  return h;
}

const ChainInfo& PosteriorDraws::chain_info(int chain) const {
  for (const auto& c : chains)
    if (c.chain == chain) return c;
  throw ValidationError("no chain " + std::to_string(chain) + " in posterior draws");
}

double PosteriorDraws::fitted(const Draw& d, std::size_t i, int t) const {
  double v = d.mu[i];
  for (int w = 2; w <= t; ++w) v += d.delta[w - 2][i] + d.tau[w - 2][i] * d.z[w - 2][i];
  return v;
}

InverseGamma sigma2_posterior(double nu, double lambda, std::size_t n, double ssr) {
  return {(nu + static_cast<double>(n)) / 2.0, (nu * lambda + ssr) / 2.0};
}

double draw_inverse_gamma(const InverseGamma& ig, Rng& rng) {
  return 1.0 / rng.gamma(ig.shape, ig.scale);
}

double update_sigma2(std::span<const double> residuals, double nu, double lambda, Rng& rng) {
  double ssr = 0.0;
  for (double r : residuals) ssr += r * r;
  return draw_inverse_gamma(sigma2_posterior(nu, lambda, residuals.size(), ssr), rng);
}

double missing_treatment_probability(double prior, double sigma2, std::span<const double> residuals,
                                     double tau) {
  if (!(prior > 0.0 && prior < 1.0))
    throw ValidationError("treatment prior probability must lie in (0,1)");
  double exponent = 0.0;
  for (double e : residuals) exponent += ((e - tau) * (e - tau) - e * e) / (2.0 * sigma2);
  if (exponent == 0.0) return prior;  // no evidence, e.g. tau == 0
  return 1.0 / (1.0 + (1.0 - prior) / prior * std::exp(exponent));
}

std::int8_t impute_missing_treatment(double prior, double sigma2, std::span<const double> residuals,
                                     double tau, Rng& rng) {
  return rng.bernoulli(missing_treatment_probability(prior, sigma2, residuals, tau)) ? 1 : 0;
}

namespace {

struct Block {
  const BlockSchema* schema = nullptr;
  int first_wave = 1;  // first outcome wave the block's fit enters
  DesignMatrix design;
  DesignMatrix test_design;
  std::vector<Tree> trees;
  std::vector<std::vector<double>> fits;  // per tree, per subject
  std::vector<double> total;
  TreeSamplerSettings settings;
  Rng rng;
  bool frozen = false;
  std::vector<std::size_t> unit_rows;
  std::vector<double> counts;
  std::vector<double> sums;
  BlockDiagnostics diag;
};

void sum_trees(const std::vector<Tree>& trees, const DesignMatrix& x, std::vector<double>& out,
               std::vector<double>& scratch) {
  out.assign(x.rows(), 0.0);
  scratch.resize(x.rows());
  for (const auto& t : trees) {
    tree_fits(t, x, scratch);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += scratch[i];
  }
}

// Scores for wave w under a chain's propensity model. SUPPLIED models read the
// dataset's ps.<w> column.
std::vector<double> propensity_scores(const PropensityModel& model, const ModelSchema& schema,
                                      const PanelDataset& data, std::vector<std::string>* warnings) {
  const int w = model.wave();
  if (model.method() == PropensityMethod::Supplied) {
    auto it = data.supplied_propensity.find(w);
    if (it == data.supplied_propensity.end())
      throw SchemaError("supplied propensity column ps." + std::to_string(w) + " is absent");
    return supplied_propensity(w, it->second).scores;
  }
  return model.score(build_design(schema.propensity_block(w), schema, data, {}, warnings));
}

class ChainRunner {
 public:
  ChainRunner(const PanelDataset& data, const HyperParams& hp, const FitOptions& opt)
      : data_(data), hp_(hp.resolved()), opt_(opt) {}

  PosteriorDraws run();

 private:
  void setup();
  void build_units(Block& b);
  void update_block(Block& b);
  void update_sigma();
  void impute_treatments();
  void refresh_residuals();
  double from_scratch_drift() const;
  void save(int iter);

  double& r(std::size_t i, int t) { return resid_[i * T_ + (t - 1)]; }
  double r(std::size_t i, int t) const { return resid_[i * T_ + (t - 1)]; }
  std::int8_t zv(std::size_t i, int t) const { return z_[i * T_ + (t - 1)]; }
  Block& tau_block(int w) { return blocks_[2 * (w - 2) + 2]; }

  const PanelDataset& data_;
  HyperParams hp_;
  FitOptions opt_;

  PosteriorDraws out_;
  ChainInfo info_;
  std::size_t n_ = 0;
  int T_ = 0;
  std::uint64_t chain_seed_ = 0;
  std::vector<double> ystd_;
  std::vector<int> last_;
  std::vector<std::int8_t> z_;
  std::vector<std::vector<std::size_t>> missing_z_;  // [w - 2]
  std::vector<double> resid_;
  std::vector<Block> blocks_;
  std::vector<std::vector<double>> pihat_;  // [w - 2]
  double sigma2_ = 1.0;
  Rng sigma_rng_;
  Rng z_rng_;
  TreeSampler sampler_;
  std::vector<double> new_fit_;
  std::vector<double> scratch_;
};

void ChainRunner::setup() {
  data_.validate();
  for (double v : data_.y)
    if (std::isinf(v)) throw ValidationError("outcomes must be finite");
  hp_.validate();
  n_ = data_.subjects();
  T_ = data_.waves;
  chain_seed_ = derive_seed(hp_.seed, 0x1000 + static_cast<std::uint64_t>(opt_.chain));
  sigma_rng_ = Rng(chain_seed_, 1);
  z_rng_ = Rng(chain_seed_, 2);

  auto [std_data, standardizer] = standardize_outcomes(data_);
  ystd_ = std::move(std_data.y);
  info_.chain = opt_.chain;
  info_.replicate = data_.replicate;
  info_.seed = chain_seed_;
  info_.standardizer = standardizer;

  last_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) last_[i] = data_.last_wave(i);
  z_ = data_.z;
  resid_ = ystd_;

  const ModelSchema schema = make_schema(data_);
  out_.schema = schema;
  out_.hp = hp_;
  out_.waves = T_;
  out_.ids = data_.ids;
  out_.weights = data_.weights;
  out_.last_wave = last_;
  const ModelSchema& sc = out_.schema;

  // Propensity scores, wave by wave.
  missing_z_.assign(std::max(T_ - 1, 0), {});
  for (int w = 2; w <= T_; ++w) {
    std::vector<std::int8_t> zw(n_);
    std::size_t treated = 0, labelled = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      zw[i] = zv(i, w);
      if (zw[i] == kMissingTreatment) {
        missing_z_[w - 2].push_back(i);
        // Start imputed treatments at 0; the first sweep redraws them.
        z_[i * T_ + (w - 1)] = 0;
      } else {
        ++labelled;
        treated += static_cast<std::size_t>(zw[i]);
      }
    }
    const bool constant = treated == 0 || treated == labelled;
    if (constant && opt_.require_overlap) {
      throw EstimationRefused("overlap violated at wave " + std::to_string(w) + ": every observed z." +
                                  std::to_string(w) + " is " + (treated == 0 ? "0" : "1"),
                              w);
    }
    const DesignMatrix px = build_design(sc.propensity_block(w), sc, data_, {}, nullptr);
    PropensityModel model;
    if (opt_.propensity_method == PropensityMethod::Supplied) {
      model = supplied_model(w);
    } else if (constant) {
      const double p = labelled ? static_cast<double>(treated) / static_cast<double>(labelled) : 0.5;
      model = constant_model(w, p, px.cols());
    } else if (opt_.propensity_method == PropensityMethod::Logistic) {
      model = fit_logistic(px, zw, w);
    } else {
      model = fit_probit_forest(px, zw, w, opt_.probit,
                                derive_seed(chain_seed_, 3 + 100 * static_cast<std::uint64_t>(w)));
    }
    pihat_.push_back(propensity_scores(model, sc, data_, nullptr));
    info_.propensity.push_back(std::move(model));
  }
  info_.propensity_scores = pihat_;

  blocks_.resize(sc.blocks.size());
  for (std::size_t b = 0; b < sc.blocks.size(); ++b) {
    Block& blk = blocks_[b];
    blk.schema = &sc.blocks[b];
    const ForestKind kind = blk.schema->kind;
    const int w = blk.schema->wave;
    blk.first_wave = kind == ForestKind::Mu ? 1 : w;
    std::span<const double> pi;
    if (kind == ForestKind::Delta) pi = pihat_[w - 2];
    blk.design = build_design(*blk.schema, sc, data_, pi, nullptr);
    int count = hp_.n_mu;
    TreeSamplerSettings& s = blk.settings;
    switch (kind) {
      case ForestKind::Mu:
        s.alpha = hp_.alpha_mu;
        s.beta = hp_.beta_mu;
        s.leaf.variance = hp_.sigma2_mu;
        break;
      case ForestKind::Delta:
        count = hp_.n_delta;
        s.alpha = hp_.alpha_delta;
        s.beta = hp_.beta_delta;
        s.leaf.variance = hp_.sigma2_delta;
        break;
      case ForestKind::Tau:
        count = hp_.n_tau;
        s.alpha = hp_.alpha_tau;
        s.beta = hp_.beta_tau;
        s.leaf.variance = hp_.sigma2_tau;
        blk.frozen = opt_.freeze_tau;
        break;
    }
    s.moves = opt_.moves;
    s.min_leaf_size = opt_.min_leaf_size;
    blk.trees.assign(count, Tree{});
    blk.fits.assign(count, std::vector<double>(n_, 0.0));
    blk.total.assign(n_, 0.0);
    blk.rng = Rng(chain_seed_, 10 + b);
    blk.diag.label = blk.schema->label();
    build_units(blk);
  }

  if (opt_.test) {
    const PanelDataset& test = *opt_.test;
    if (test.waves != T_) throw SchemaError("test data has a different number of waves");
    std::vector<std::vector<double>> test_pi;
    for (const auto& m : info_.propensity) test_pi.push_back(propensity_scores(m, sc, test, nullptr));
    for (auto& blk : blocks_) {
      std::span<const double> pi;
      if (blk.schema->kind == ForestKind::Delta) pi = test_pi[blk.schema->wave - 2];
      blk.test_design = build_design(*blk.schema, sc, test, pi, nullptr);
    }
  }
}

void ChainRunner::build_units(Block& b) {
  b.unit_rows.clear();
  b.counts.clear();
  const bool tau = b.schema->kind == ForestKind::Tau;
  for (std::size_t i = 0; i < n_; ++i) {
    if (last_[i] < b.first_wave) continue;
    if (tau && zv(i, b.first_wave) != 1) continue;
    b.unit_rows.push_back(i);
    b.counts.push_back(static_cast<double>(last_[i] - b.first_wave + 1));
  }
  b.sums.assign(b.unit_rows.size(), 0.0);
}

void ChainRunner::update_block(Block& b) {
  if (b.frozen) return;
  if (b.schema->kind == ForestKind::Tau) build_units(b);
  new_fit_.resize(n_);
  for (std::size_t j = 0; j < b.trees.size(); ++j) {
    std::vector<double>& fit = b.fits[j];
    for (std::size_t u = 0; u < b.unit_rows.size(); ++u) {
      const std::size_t i = b.unit_rows[u];
      double s = 0.0;
      for (int t = b.first_wave; t <= last_[i]; ++t) s += r(i, t);
      b.sums[u] = s + b.counts[u] * fit[i];
    }
    ForestUnits units{&b.design, b.unit_rows, b.counts, b.sums};
    const TreeStepResult res = sampler_.step(b.trees[j], units, sigma2_, b.settings, b.rng);
    if (!res.noop) {
      ++b.diag.proposed;
      if (res.accepted) ++b.diag.accepted;
    }
    tree_fits(b.trees[j], b.design, new_fit_);
    for (std::size_t u = 0; u < b.unit_rows.size(); ++u) {
      const std::size_t i = b.unit_rows[u];
      const double d = new_fit_[i] - fit[i];
      for (int t = b.first_wave; t <= last_[i]; ++t) r(i, t) -= d;
    }
    for (std::size_t i = 0; i < n_; ++i) b.total[i] += new_fit_[i] - fit[i];
    fit.swap(new_fit_);
    if (opt_.check_invariants)
      info_.max_residual_drift = std::max(info_.max_residual_drift, from_scratch_drift());
  }
}

// Largest |r - (y - yhat)| with yhat rebuilt from the per-tree fits.
double ChainRunner::from_scratch_drift() const {
  std::vector<std::vector<double>> totals(blocks_.size(), std::vector<double>(n_, 0.0));
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    for (const auto& f : blocks_[b].fits)
      for (std::size_t i = 0; i < n_; ++i) totals[b][i] += f[i];
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double yhat = totals[0][i];
    for (int t = 1; t <= last_[i]; ++t) {
      if (t >= 2) yhat += totals[2 * (t - 2) + 1][i] + totals[2 * (t - 2) + 2][i] * zv(i, t);
      worst = std::max(worst, std::abs(r(i, t) - (ystd_[i * T_ + (t - 1)] - yhat)));
    }
  }
  return worst;
}

void ChainRunner::refresh_residuals() {
  for (auto& b : blocks_) {
    std::fill(b.total.begin(), b.total.end(), 0.0);
    for (const auto& f : b.fits)
      for (std::size_t i = 0; i < n_; ++i) b.total[i] += f[i];
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double yhat = blocks_[0].total[i];
    for (int t = 1; t <= last_[i]; ++t) {
      if (t >= 2) yhat += blocks_[2 * (t - 2) + 1].total[i] + blocks_[2 * (t - 2) + 2].total[i] * zv(i, t);
      r(i, t) = ystd_[i * T_ + (t - 1)] - yhat;
    }
  }
}

void ChainRunner::update_sigma() {
  scratch_.clear();
  for (std::size_t i = 0; i < n_; ++i)
    for (int t = 1; t <= last_[i]; ++t) scratch_.push_back(r(i, t));
  sigma2_ = update_sigma2(scratch_, hp_.nu, hp_.lambda, sigma_rng_);
}

void ChainRunner::impute_treatments() {
  std::vector<double> e;
  for (int w = 2; w <= T_; ++w) {
    const Block& tb = tau_block(w);
    for (std::size_t i : missing_z_[w - 2]) {
      const double tau = tb.total[i];
      const std::int8_t old = zv(i, w);
      e.clear();
      for (int t = w; t <= last_[i]; ++t) e.push_back(r(i, t) + tau * old);
      const std::int8_t z = impute_missing_treatment(pihat_[w - 2][i], sigma2_, e, tau, z_rng_);
      if (z != old) {
        for (int t = w; t <= last_[i]; ++t) r(i, t) -= tau * (z - old);
        z_[i * T_ + (w - 1)] = z;
      }
    }
  }
}

void ChainRunner::save(int iter) {
  const Standardizer& s = info_.standardizer;
  Draw d;
  d.chain = opt_.chain;
  d.iter = iter;
  d.sigma2 = sigma2_;
  std::vector<std::vector<double>> totals(blocks_.size(), std::vector<double>(n_, 0.0));
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    for (const auto& f : blocks_[b].fits)
      for (std::size_t i = 0; i < n_; ++i) totals[b][i] += f[i];
  d.mu.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) d.mu[i] = s.destandardize(totals[0][i]);
  for (int w = 2; w <= T_; ++w) {
    std::vector<double> dl(n_), tl(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      dl[i] = s.rescale(totals[2 * (w - 2) + 1][i]);
      tl[i] = s.rescale(totals[2 * (w - 2) + 2][i]);
    }
    d.delta.push_back(std::move(dl));
    d.tau.push_back(std::move(tl));
    std::vector<std::int8_t> zw(n_);
    for (std::size_t i = 0; i < n_; ++i) zw[i] = zv(i, w);
    d.z.push_back(std::move(zw));
  }
  if (opt_.check_invariants) {
    for (std::size_t i = 0; i < n_; ++i) {
      double yhat = totals[0][i];
      for (int t = 1; t <= last_[i]; ++t) {
        if (t >= 2) yhat += totals[2 * (t - 2) + 1][i] + totals[2 * (t - 2) + 2][i] * zv(i, t);
        info_.max_identity_error = std::max(
            info_.max_identity_error, std::abs(ystd_[i * T_ + (t - 1)] - r(i, t) - yhat));
      }
    }
  }
  if (opt_.store_forests) {
    for (const auto& b : blocks_) d.forests.push_back(b.trees);
  }
  if (opt_.test) {
    std::vector<double> sum;
    sum_trees(blocks_[0].trees, blocks_[0].test_design, sum, scratch_);
    d.test_mu.resize(sum.size());
    for (std::size_t i = 0; i < sum.size(); ++i) d.test_mu[i] = s.destandardize(sum[i]);
    for (int w = 2; w <= T_; ++w) {
      for (int k = 1; k <= 2; ++k) {
        const Block& b = blocks_[2 * (w - 2) + k];
        sum_trees(b.trees, b.test_design, sum, scratch_);
        for (double& v : sum) v = s.rescale(v);
        (k == 1 ? d.test_delta : d.test_tau).push_back(sum);
      }
    }
  }
  out_.draws.push_back(std::move(d));
}

PosteriorDraws ChainRunner::run() {
  setup();
  const int total = hp_.n_burn + hp_.n_save;
  out_.draws.reserve(hp_.n_save);
  for (int iter = 0; iter < total; ++iter) {
    for (auto& b : blocks_) update_block(b);
    refresh_residuals();
    update_sigma();
    impute_treatments();
    if (iter >= hp_.n_burn) save(iter);
    if (opt_.progress) opt_.progress(opt_.chain, iter + 1, total);
  }
  for (const auto& b : blocks_) info_.blocks.push_back(b.diag);
  out_.chains.push_back(std::move(info_));
  return std::move(out_);
}

}  // namespace

PosteriorDraws fit(const PanelDataset& data, const HyperParams& hp, const FitOptions& options) {
  return ChainRunner(data, hp, options).run();
}

PosteriorDraws fit_chains(const PanelDataset& data, const HyperParams& hp, const FitOptions& options,
                          int chains, int threads) {
  std::vector<PanelDataset> views;
  if (!data.plausible_values.empty()) {
    views = plausible_value_views(data);
  } else {
    if (chains < 1) throw ValidationError("need at least one chain");
    views.assign(static_cast<std::size_t>(chains), data);
  }
  std::vector<PosteriorDraws> parts(views.size());
  std::vector<std::exception_ptr> errors(views.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < views.size(); c = next++) {
      try {
        FitOptions o = options;
        o.chain = static_cast<int>(c);
        parts[c] = fit(views[c], hp, o);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, static_cast<int>(views.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return pool_chains(std::move(parts));
}

PosteriorDraws pool_chains(std::vector<PosteriorDraws> parts) {
  if (parts.empty()) throw ValidationError("pool_chains needs at least one chain");
  PosteriorDraws out = std::move(parts.front());
  for (std::size_t k = 1; k < parts.size(); ++k) {
    PosteriorDraws& p = parts[k];
    if (p.schema.hash() != out.schema.hash()) throw SchemaError("chains were fit with different design schemas");
    if (p.ids != out.ids || p.waves != out.waves) throw SchemaError("chains cover different subjects or waves");
    HyperParams a = p.hp, b = out.hp;
    a.seed = b.seed = 0;
    if (!(a == b)) throw SchemaError("chains were fit with different hyperparameters");
    for (auto& c : p.chains) {
      for (const auto& existing : out.chains)
        if (existing.chain == c.chain)
          throw SchemaError("chain id " + std::to_string(c.chain) + " appears twice");
      out.chains.push_back(std::move(c));
    }
    for (auto& d : p.draws) out.draws.push_back(std::move(d));
  }
  return out;
}

Prediction predict(const PosteriorDraws& draws, const PanelDataset& newdata,
                   std::vector<std::string>* warnings) {
  const ModelSchema& sc = draws.schema;
  if (newdata.waves != draws.waves)
    throw SchemaError("newdata has " + std::to_string(newdata.waves) + " waves, model expects " +
                      std::to_string(draws.waves));
  const std::size_t n = newdata.subjects();
  const int T = draws.waves;

  struct ChainDesigns {
    Standardizer standardizer;
    std::vector<DesignMatrix> designs;
  };
  std::map<int, ChainDesigns> per_chain;
  for (const auto& c : draws.chains) {
    ChainDesigns cd;
    cd.standardizer = c.standardizer;
    std::vector<std::vector<double>> pi;
    for (const auto& m : c.propensity) pi.push_back(propensity_scores(m, sc, newdata, warnings));
    for (const auto& blk : sc.blocks) {
      std::span<const double> p;
      if (blk.kind == ForestKind::Delta) p = pi[blk.wave - 2];
      cd.designs.push_back(build_design(blk, sc, newdata, p, warnings));
    }
    per_chain.emplace(c.chain, std::move(cd));
  }

  Prediction out;
  std::vector<double> sum, scratch;
  for (const auto& d : draws.draws) {
    if (d.forests.size() != sc.blocks.size())
      throw ValidationError("posterior draws were saved without forests; cannot predict");
    const ChainDesigns& cd = per_chain.at(d.chain);
    const Standardizer& s = cd.standardizer;
    for (std::size_t b = 0; b < sc.blocks.size(); ++b)
      for (const auto& t : d.forests[b])
        if (t.max_feature() >= static_cast<int>(cd.designs[b].cols()))
          throw StructureError("tree in " + sc.blocks[b].label() + " references a missing column");
    sum_trees(d.forests[0], cd.designs[0], sum, scratch);
    std::vector<double> mu(n);
    for (std::size_t i = 0; i < n; ++i) mu[i] = s.destandardize(sum[i]);
    std::vector<std::vector<double>> delta, tau;
    for (int w = 2; w <= T; ++w) {
      for (int k = 1; k <= 2; ++k) {
        const std::size_t b = static_cast<std::size_t>(2 * (w - 2) + k);
        sum_trees(d.forests[b], cd.designs[b], sum, scratch);
        for (double& v : sum) v = s.rescale(v);
        (k == 1 ? delta : tau).push_back(sum);
      }
    }
    std::vector<std::vector<double>> yhat(T, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      double v = mu[i];
      yhat[0][i] = v;
      for (int w = 2; w <= T; ++w) {
        const std::int8_t z = newdata.treatment(i, w);
        v += delta[w - 2][i] + (z == kMissingTreatment ? kMissing : tau[w - 2][i] * z);
        yhat[w - 1][i] = v;
      }
    }
    out.mu.push_back(std::move(mu));
    out.delta.push_back(std::move(delta));
    out.tau.push_back(std::move(tau));
    out.yhat.push_back(std::move(yhat));
  }
  return out;
}

}  // namespace lbcf
