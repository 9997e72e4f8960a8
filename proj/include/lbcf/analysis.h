#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbcf/sampler.h"

namespace lbcf {

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

struct WaveEffects {
  int wave = 2;
  std::vector<Interval> tau;    // per subject
  std::vector<Interval> delta;  // per subject
  std::vector<double> ate;      // one weighted ATE per pooled draw
  Interval ate_interval;
};

struct EffectSummary {
  double level = 0.95;
  std::vector<WaveEffects> waves;  // waves 2..T
};

// Linear-interpolation sample quantile (R type 7); `sorted` must be ascending.
double sample_quantile(std::span<const double> sorted, double p);
// Mean and central `level` interval of a posterior sample.
Interval summarize_sample(std::span<const double> sample, double level = 0.95);

// Weighted ATE of wave `wave` per draw, over subjects observed at that wave.
std::vector<double> ate_posterior(const PosteriorDraws& draws, std::span<const double> weights, int wave);
std::vector<double> ate_posterior(const PosteriorDraws& draws, int wave);  // stored weights

EffectSummary summarize_effects(const PosteriorDraws& draws, double level = 0.95);

struct FeatureImportance {
  std::string feature;  // design column, or parent categorical for one-hot columns
  double splits = 0.0;  // posterior mean split count
};

// `block` is "mu", "delta", "tau" (all waves) or a single block such as
// "tau.2". Throws ValidationError for anything else.
std::vector<FeatureImportance> variable_importance(const PosteriorDraws& draws, const std::string& block);

// Standard deviation of the posterior-mean growth values of a wave.
struct GrowthSpread {
  double unweighted = 0.0;
  double weighted = 0.0;
};
GrowthSpread growth_spread(const PosteriorDraws& draws, const EffectSummary& summary, int wave);

// Exports. `comments` become leading '#' lines.
void write_effects_csv(std::ostream& out, const PosteriorDraws& draws, const EffectSummary& s,
                       const std::vector<std::string>& comments = {});
void write_ate_samples_csv(std::ostream& out, const EffectSummary& s,
                           const std::vector<std::string>& comments = {});
void write_importance_csv(std::ostream& out, const std::vector<FeatureImportance>& imp,
                          const std::vector<std::string>& comments = {});
// Two-column gnuplot data (bin centre, count) with `bins` equal-width bins.
void write_histogram(std::ostream& out, std::span<const double> values, int bins,
                     const std::vector<std::string>& comments = {});
nlohmann::json summary_report(const PosteriorDraws& draws, const EffectSummary& s);

}  // namespace lbcf
