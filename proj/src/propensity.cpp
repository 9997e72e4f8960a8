#include "lbcf/propensity.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "lbcf/csv.h"
#include "lbcf/errors.h"
#include "lbcf/tree_sampler.h"

namespace lbcf {

std::string to_string(PropensityMethod m) {
  switch (m) {
    case PropensityMethod::Logistic: return "logistic";
    case PropensityMethod::ProbitForest: return "probit_forest";
    case PropensityMethod::Supplied: return "supplied";
  }
  return "?";
}

PropensityMethod propensity_method_from_string(const std::string& s) {
  if (s == "logistic") return PropensityMethod::Logistic;
  if (s == "probit_forest") return PropensityMethod::ProbitForest;
  if (s == "supplied") return PropensityMethod::Supplied;
  throw ValidationError("unknown propensity method '" + s +
                        "' (expected logistic, probit_forest or supplied)");
}

double clip_propensity(double p) { return std::clamp(p, kPropensityFloor, kPropensityCeiling); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Acklam's rational approximation refined by one Newton step.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p > 1 - 0.02425) {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

namespace {

std::vector<std::size_t> labelled_rows(std::span<const std::int8_t> z, int wave) {
  std::vector<std::size_t> rows;
  std::size_t treated = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 0 || z[i] == 1) {
      rows.push_back(i);
      treated += static_cast<std::size_t>(z[i]);
    }
  }
  if (treated == 0 || treated == rows.size()) {
    throw EstimationRefused("overlap violated at wave " + std::to_string(wave) + ": observed z." +
                                std::to_string(wave) + " is " +
                                (treated == 0 ? "all 0" : "all 1"),
                            wave);
  }
  return rows;
}

double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

PropensityModel fit_logistic(const DesignMatrix& x, std::span<const std::int8_t> z, int wave) {
  if (z.size() != x.rows()) throw ValidationError("propensity: z length differs from design rows");
  const auto rows = labelled_rows(z, wave);
  const std::size_t p = x.cols();
  PropensityModel m;
  m.method_ = PropensityMethod::Logistic;
  m.wave_ = wave;
  m.column_means_.assign(p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i : rows) {
      const double v = x(i, c);
      if (!is_missing(v)) {
        sum += v;
        ++n;
      }
    }
    m.column_means_[c] = n ? sum / static_cast<double>(n) : 0.0;
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(p + 1));
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t i = rows[r];
    X(r, 0) = 1.0;
    for (std::size_t c = 0; c < p; ++c) {
      const double v = x(i, c);
      X(r, static_cast<Eigen::Index>(c + 1)) = is_missing(v) ? m.column_means_[c] : v;
    }
    y(r) = z[i];
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  // Tiny ridge on slopes keeps constant or collinear columns solvable.
  Eigen::MatrixXd ridge = Eigen::MatrixXd::Identity(X.cols(), X.cols()) * 1e-9;
  ridge(0, 0) = 0.0;
  Eigen::MatrixXd info;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      mu(r) = expit(eta(r));
      w(r) = std::max(mu(r) * (1.0 - mu(r)), 1e-12);
    }
    info = X.transpose() * w.asDiagonal() * X + ridge;
    const Eigen::VectorXd grad = X.transpose() * (y - mu) - ridge * beta;
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    beta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd w(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double mu = expit(eta(r));
      w(r) = std::max(mu * (1.0 - mu), 1e-12);
    }
    info = X.transpose() * w.asDiagonal() * X + ridge;
  }
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  m.coef_.assign(beta.data(), beta.data() + beta.size());
  m.se_.resize(m.coef_.size());
  for (Eigen::Index k = 0; k < X.cols(); ++k) m.se_[k] = std::sqrt(cov(k, k));
  return m;
}

PropensityModel fit_probit_forest(const DesignMatrix& x, std::span<const std::int8_t> z, int wave,
                                  const ProbitForestSettings& settings, std::uint64_t seed) {
  if (z.size() != x.rows()) throw ValidationError("propensity: z length differs from design rows");
  const auto rows = labelled_rows(z, wave);
  PropensityModel m;
  m.method_ = PropensityMethod::ProbitForest;
  m.wave_ = wave;
  double treated = 0.0;
  for (std::size_t i : rows) treated += z[i];
  m.offset_ = normal_quantile(treated / static_cast<double>(rows.size()));

  const std::size_t n = rows.size();
  const int n_trees = settings.n_trees;
  TreeSamplerSettings ts;
  ts.leaf.variance = std::pow(3.0 / (2.0 * std::sqrt(static_cast<double>(n_trees))), 2);
  ts.min_leaf_size = settings.min_leaf_size;

  Rng rng(seed, 0x9b0b);
  std::vector<Tree> trees(n_trees);
  std::vector<std::vector<double>> fits(n_trees, std::vector<double>(n, 0.0));
  std::vector<double> total(n, 0.0), latent(n, 0.0), counts(n, 1.0), sums(n, 0.0);
  // Tree fits are evaluated on the labelled rows only; this sub-design keeps
  // the unit/row mapping trivial.
  DesignMatrix sub(x.names(), n);
  {
    std::vector<double> col(n);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      for (std::size_t r = 0; r < n; ++r) col[r] = x(rows[r], c);
      sub.set_column(c, col);
    }
  }
  std::vector<std::size_t> unit_rows(n);
  for (std::size_t r = 0; r < n; ++r) unit_rows[r] = r;
  TreeSampler sampler;
  std::vector<double> new_fit(n);
  const int total_iter = settings.n_burn + settings.n_save * settings.thin;
  for (int iter = 0; iter < total_iter; ++iter) {
    for (std::size_t r = 0; r < n; ++r)
      latent[r] = rng.truncated_normal(m.offset_ + total[r], z[rows[r]] == 1) - m.offset_;
    for (int j = 0; j < n_trees; ++j) {
      for (std::size_t r = 0; r < n; ++r) sums[r] = latent[r] - total[r] + fits[j][r];
      ForestUnits units{&sub, unit_rows, counts, sums};
      sampler.step(trees[j], units, 1.0, ts, rng);
      tree_fits(trees[j], sub, new_fit);
      for (std::size_t r = 0; r < n; ++r) {
        total[r] += new_fit[r] - fits[j][r];
        fits[j][r] = new_fit[r];
      }
    }
    if (iter >= settings.n_burn && (iter - settings.n_burn) % settings.thin == settings.thin - 1)
      m.forests_.push_back(trees);
  }
  return m;
}

PropensityModel supplied_model(int wave) {
  PropensityModel m;
  m.method_ = PropensityMethod::Supplied;
  m.wave_ = wave;
  return m;
}

PropensityModel constant_model(int wave, double p, std::size_t columns) {
  const double q = clip_propensity(p);
  PropensityModel m;
  m.method_ = PropensityMethod::Logistic;
  m.wave_ = wave;
  m.column_means_.assign(columns, 0.0);
  m.coef_.assign(columns + 1, 0.0);
  m.coef_[0] = std::log(q / (1.0 - q));
  m.se_.assign(columns + 1, 0.0);
  return m;
}

std::vector<double> PropensityModel::score(const DesignMatrix& x) const {
  std::vector<double> out(x.rows(), 0.0);
  switch (method_) {
    case PropensityMethod::Logistic: {
      if (x.cols() + 1 != coef_.size())
        throw SchemaError("propensity model expects " + std::to_string(coef_.size() - 1) + " columns");
      for (std::size_t i = 0; i < x.rows(); ++i) {
        double eta = coef_[0];
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const double v = x(i, c);
          eta += coef_[c + 1] * (is_missing(v) ? column_means_[c] : v);
        }
        out[i] = clip_propensity(expit(eta));
      }
      break;
    }
    case PropensityMethod::ProbitForest: {
      if (forests_.empty()) throw ValidationError("probit-forest propensity model has no draws");
      std::vector<double> f(x.rows());
      for (const auto& forest : forests_) {
        std::fill(f.begin(), f.end(), offset_);
        for (const auto& t : forest) {
          if (t.max_feature() >= static_cast<int>(x.cols()))
            throw SchemaError("propensity forest references a column outside the design");
          for (std::size_t i = 0; i < x.rows(); ++i) f[i] += t.node(t.leaf_for(x, i)).leaf_value;
        }
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] += normal_cdf(f[i]);
      }
      for (double& v : out) v = clip_propensity(v / static_cast<double>(forests_.size()));
      break;
    }
    case PropensityMethod::Supplied:
      throw ValidationError("supplied propensity scores must be provided with the data (ps.<t> columns)");
  }
  return out;
}

nlohmann::json PropensityModel::to_json() const {
  nlohmann::json j{{"method", lbcf::to_string(method_)}, {"wave", wave_}};
  if (method_ == PropensityMethod::Logistic) {
    j["coefficients"] = coef_;
    j["standard_errors"] = se_;
    j["column_means"] = column_means_;
  } else if (method_ == PropensityMethod::ProbitForest) {
    j["offset"] = offset_;
    nlohmann::json draws = nlohmann::json::array();
    for (const auto& forest : forests_) {
      nlohmann::json trees = nlohmann::json::array();
      for (const auto& t : forest) trees.push_back(tree_to_json(t));
      draws.push_back(std::move(trees));
    }
    j["draws"] = std::move(draws);
  }
  return j;
}

PropensityModel PropensityModel::from_json(const nlohmann::json& j) {
  PropensityModel m;
  m.method_ = propensity_method_from_string(j.at("method").get<std::string>());
  m.wave_ = j.at("wave").get<int>();
  if (m.method_ == PropensityMethod::Logistic) {
    m.coef_ = j.at("coefficients").get<std::vector<double>>();
    m.se_ = j.at("standard_errors").get<std::vector<double>>();
    m.column_means_ = j.at("column_means").get<std::vector<double>>();
  } else if (m.method_ == PropensityMethod::ProbitForest) {
    m.offset_ = j.at("offset").get<double>();
    for (const auto& draw : j.at("draws")) {
      std::vector<Tree> forest;
      for (const auto& t : draw) forest.push_back(tree_from_json(t));
      m.forests_.push_back(std::move(forest));
    }
  }
  return m;
}

PropensityEstimate estimate_propensity(const DesignMatrix& x, std::span<const std::int8_t> z,
                                       PropensityMethod method, int wave,
                                       const ProbitForestSettings& settings, std::uint64_t seed) {
  switch (method) {
    case PropensityMethod::Logistic:
      return {wave, fit_logistic(x, z, wave).score(x), method};
    case PropensityMethod::ProbitForest:
      return {wave, fit_probit_forest(x, z, wave, settings, seed).score(x), method};
    case PropensityMethod::Supplied:
      break;
  }
  throw ValidationError("supplied scores go through supplied_propensity()");
}

PropensityEstimate supplied_propensity(int wave, std::span<const double> scores) {
  PropensityEstimate e{wave, {}, PropensityMethod::Supplied};
  e.scores.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = scores[i];
    if (!(p > 0.0 && p < 1.0)) {
      throw ValidationError("supplied propensity score for wave " + std::to_string(wave) +
                            " at row " + std::to_string(i + 1) + " is outside (0,1)");
    }
    e.scores.push_back(clip_propensity(p));
  }
  return e;
}

void write_scores_csv(std::ostream& out, std::span<const std::string> ids,
                      const PropensityEstimate& estimate) {
  write_csv_row(out, {"subject_id", "score"});
  for (std::size_t i = 0; i < ids.size(); ++i)
    write_csv_row(out, {ids[i], format_double(estimate.scores[i])});
}

}  // namespace lbcf
