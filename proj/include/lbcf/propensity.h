#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbcf/design_matrix.h"
#include "lbcf/tree.h"

namespace lbcf {

enum class PropensityMethod : std::uint8_t { Logistic, ProbitForest, Supplied };

std::string to_string(PropensityMethod m);
PropensityMethod propensity_method_from_string(const std::string& s);

inline constexpr double kPropensityFloor = 0.001;
inline constexpr double kPropensityCeiling = 0.999;

struct PropensityEstimate {
  int wave = 2;
  std::vector<double> scores;  // one per design row, in [0.001, 0.999]
  PropensityMethod method = PropensityMethod::Logistic;
};

struct ProbitForestSettings {
  int n_trees = 50;
  int n_burn = 200;
  int n_save = 100;
  int thin = 2;
  std::size_t min_leaf_size = 5;
};

// A fitted score model that can be re-applied to new rows with the same
// design layout.
class PropensityModel {
 public:
  PropensityModel() = default;

  PropensityMethod method() const { return method_; }
  int wave() const { return wave_; }

  // Clipped scores for every row of `x`. SUPPLIED models cannot score.
  std::vector<double> score(const DesignMatrix& x) const;

  // LOGISTIC only: intercept first, then one entry per design column.
  const std::vector<double>& coefficients() const { return coef_; }
  const std::vector<double>& standard_errors() const { return se_; }

  nlohmann::json to_json() const;
  static PropensityModel from_json(const nlohmann::json& j);

  friend PropensityModel fit_logistic(const DesignMatrix&, std::span<const std::int8_t>, int);
  friend PropensityModel fit_probit_forest(const DesignMatrix&, std::span<const std::int8_t>, int,
                                           const ProbitForestSettings&, std::uint64_t);
  friend PropensityModel supplied_model(int wave);
  friend PropensityModel constant_model(int wave, double p, std::size_t columns);

 private:
  PropensityMethod method_ = PropensityMethod::Supplied;
  int wave_ = 2;
  std::vector<double> column_means_;  // LOGISTIC imputation values
  std::vector<double> coef_;
  std::vector<double> se_;
  double offset_ = 0.0;                     // PROBIT_FOREST latent offset
  std::vector<std::vector<Tree>> forests_;  // PROBIT_FOREST saved draws
};

// Rows with z == 0 or 1 are used for estimation; other rows still receive
// scores. Throws EstimationRefused if the observed z are constant.
PropensityModel fit_logistic(const DesignMatrix& x, std::span<const std::int8_t> z, int wave);
PropensityModel fit_probit_forest(const DesignMatrix& x, std::span<const std::int8_t> z, int wave,
                                  const ProbitForestSettings& settings, std::uint64_t seed);
PropensityModel supplied_model(int wave);
// Intercept-only logistic model scoring every row at clip(p); used when a
// wave has no overlap and the caller opted out of refusing.
PropensityModel constant_model(int wave, double p, std::size_t columns);

PropensityEstimate estimate_propensity(const DesignMatrix& x, std::span<const std::int8_t> z,
                                       PropensityMethod method, int wave,
                                       const ProbitForestSettings& settings = {},
                                       std::uint64_t seed = 1);

// Range-checks externally supplied scores (each must lie in (0,1)) and clips.
PropensityEstimate supplied_propensity(int wave, std::span<const double> scores);

double clip_propensity(double p);
double normal_cdf(double x);
double normal_quantile(double p);

// Two-column CSV (subject_id, score).
void write_scores_csv(std::ostream& out, std::span<const std::string> ids,
                      const PropensityEstimate& estimate);

}  // namespace lbcf
