#include "lbcf/analysis.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "lbcf/csv.h"
#include "lbcf/errors.h"

namespace lbcf {

double sample_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval summarize_sample(std::span<const double> sample, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("interval level must lie in (0,1)");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  double sum = 0.0;
  for (double v : s) sum += v;
  Interval out;
  out.mean = sum / static_cast<double>(s.size());
  out.lo = sample_quantile(s, (1.0 - level) / 2.0);
  out.hi = sample_quantile(s, (1.0 + level) / 2.0);
  // Summation rounding can push the mean of a near-constant sample a few ulps
  // outside its own interval.
  const double slack = 1e-12 * std::max(1.0, std::abs(out.mean));
  if (out.mean < out.lo && out.lo - out.mean <= slack) out.mean = out.lo;
  if (out.mean > out.hi && out.mean - out.hi <= slack) out.mean = out.hi;
  return out;
}

std::vector<double> ate_posterior(const PosteriorDraws& draws, std::span<const double> weights, int wave) {
  if (wave < 2 || wave > draws.waves)
    throw ValidationError("wave " + std::to_string(wave) + " has no treatment effect (valid: 2.." +
                          std::to_string(draws.waves) + ")");
  if (weights.size() != draws.ids.size()) throw ValidationError("one weight per subject is required");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw ValidationError("weights must be finite and >= 0");
    if (draws.last_wave[i] >= wave) total += weights[i];
  }
  if (!(total > 0.0)) throw ValidationError("no positive weight among subjects observed at wave " + std::to_string(wave));
  std::vector<double> out;
  out.reserve(draws.draws.size());
  for (const auto& d : draws.draws) {
    const auto& tau = d.tau[wave - 2];
    double s = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i)
      if (draws.last_wave[i] >= wave) s += weights[i] * tau[i];
    out.push_back(s / total);
  }
  return out;
}

std::vector<double> ate_posterior(const PosteriorDraws& draws, int wave) {
  return ate_posterior(draws, draws.weights, wave);
}

EffectSummary summarize_effects(const PosteriorDraws& draws, double level) {
  if (draws.draws.size() < 2) throw ValidationError("need at least two draws to summarize");
  EffectSummary s;
  s.level = level;
  const std::size_t n = draws.ids.size();
  std::vector<double> col(draws.draws.size());
  for (int w = 2; w <= draws.waves; ++w) {
    WaveEffects we;
    we.wave = w;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < draws.draws.size(); ++d) col[d] = draws.draws[d].tau[w - 2][i];
      we.tau.push_back(summarize_sample(col, level));
      for (std::size_t d = 0; d < draws.draws.size(); ++d) col[d] = draws.draws[d].delta[w - 2][i];
      we.delta.push_back(summarize_sample(col, level));
    }
    we.ate = ate_posterior(draws, w);
    we.ate_interval = summarize_sample(we.ate, level);
    s.waves.push_back(std::move(we));
  }
  return s;
}

std::vector<FeatureImportance> variable_importance(const PosteriorDraws& draws, const std::string& block) {
  std::vector<std::size_t> selected;
  const auto& blocks = draws.schema.blocks;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string kind = to_string(blocks[b].kind);
    if (block == kind || block == blocks[b].label()) selected.push_back(b);
  }
  if (selected.empty()) {
    // Distinguish an unknown kind from a known kind at a missing wave.
    const auto dot = block.find('.');
    forest_kind_from_string(block.substr(0, dot));
    throw ValidationError("model has no forest block '" + block + "'");
  }
  std::vector<std::string> order;
  std::map<std::string, double> counts;
  for (std::size_t b : selected) {
    for (const auto& c : blocks[b].columns) {
      if (!counts.count(c.parent)) order.push_back(c.parent);
      counts[c.parent];
    }
  }
  if (draws.draws.empty()) throw ValidationError("no draws to count splits in");
  for (const auto& d : draws.draws) {
    if (d.forests.size() != blocks.size())
      throw ValidationError("posterior draws were saved without forests");
    for (std::size_t b : selected) {
      for (const auto& t : d.forests[b]) {
        for (int k : t.internal_nodes()) {
          const auto f = static_cast<std::size_t>(t.node(k).rule.feature);
          if (f >= blocks[b].columns.size()) throw StructureError("split on a column outside the design");
          counts[blocks[b].columns[f].parent] += 1.0;
        }
      }
    }
  }
  std::vector<FeatureImportance> out;
  for (const auto& name : order)
    out.push_back({name, counts[name] / static_cast<double>(draws.draws.size())});
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.splits > b.splits; });
  return out;
}

GrowthSpread growth_spread(const PosteriorDraws& draws, const EffectSummary& summary, int wave) {
  const WaveEffects* we = nullptr;
  for (const auto& w : summary.waves)
    if (w.wave == wave) we = &w;
  if (!we) throw ValidationError("summary has no wave " + std::to_string(wave));
  double n = 0, sw = 0, m = 0, mw = 0;
  for (std::size_t i = 0; i < we->delta.size(); ++i) {
    if (draws.last_wave[i] < wave) continue;
    n += 1;
    sw += draws.weights[i];
    m += we->delta[i].mean;
    mw += draws.weights[i] * we->delta[i].mean;
  }
  if (n < 2 || !(sw > 0)) return {};
  m /= n;
  mw /= sw;
  double ss = 0, ssw = 0;
  for (std::size_t i = 0; i < we->delta.size(); ++i) {
    if (draws.last_wave[i] < wave) continue;
    const double v = we->delta[i].mean;
    ss += (v - m) * (v - m);
    ssw += draws.weights[i] * (v - mw) * (v - mw);
  }
  return {std::sqrt(ss / (n - 1)), std::sqrt(ssw / sw)};
}

namespace {

void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
}

}  // namespace

void write_effects_csv(std::ostream& out, const PosteriorDraws& draws, const EffectSummary& s,
                       const std::vector<std::string>& comments) {
  write_comments(out, comments);
  write_csv_row(out, {"subject_id", "wave", "observed", "tau_mean", "tau_lo", "tau_hi", "delta_mean",
                      "delta_lo", "delta_hi"});
  for (const auto& we : s.waves) {
    for (std::size_t i = 0; i < draws.ids.size(); ++i) {
      const Interval& t = we.tau[i];
      const Interval& d = we.delta[i];
      write_csv_row(out, {draws.ids[i], std::to_string(we.wave), draws.last_wave[i] >= we.wave ? "1" : "0",
                          format_double(t.mean), format_double(t.lo), format_double(t.hi),
                          format_double(d.mean), format_double(d.lo), format_double(d.hi)});
    }
  }
}

void write_ate_samples_csv(std::ostream& out, const EffectSummary& s,
                           const std::vector<std::string>& comments) {
  write_comments(out, comments);
  std::vector<std::string> header{"draw"};
  for (const auto& we : s.waves) header.push_back("ate." + std::to_string(we.wave));
  write_csv_row(out, header);
  const std::size_t nd = s.waves.empty() ? 0 : s.waves.front().ate.size();
  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<std::string> row{std::to_string(d)};
    for (const auto& we : s.waves) row.push_back(format_double(we.ate[d]));
    write_csv_row(out, row);
  }
}

void write_importance_csv(std::ostream& out, const std::vector<FeatureImportance>& imp,
                          const std::vector<std::string>& comments) {
  write_comments(out, comments);
  write_csv_row(out, {"feature", "splits"});
  for (const auto& f : imp) write_csv_row(out, {f.feature, format_double(f.splits)});
}

void write_histogram(std::ostream& out, std::span<const double> values, int bins,
                     const std::vector<std::string>& comments) {
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  write_comments(out, comments);
  out << "# bin_centre count\n";
  if (values.empty()) return;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double width = *mx > lo ? (*mx - lo) / bins : 1.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto k = static_cast<int>((v - lo) / width);
    counts[std::clamp(k, 0, bins - 1)]++;
  }
  for (int k = 0; k < bins; ++k) out << format_double(lo + (k + 0.5) * width) << ' ' << counts[k] << '\n';
}

nlohmann::json summary_report(const PosteriorDraws& draws, const EffectSummary& s) {
  nlohmann::json waves = nlohmann::json::array();
  for (const auto& we : s.waves) {
    const GrowthSpread g = growth_spread(draws, s, we.wave);
    waves.push_back({{"wave", we.wave},
                     {"ate_mean", we.ate_interval.mean},
                     {"ate_lo", we.ate_interval.lo},
                     {"ate_hi", we.ate_interval.hi},
                     {"delta_sd_unweighted", g.unweighted},
                     {"delta_sd_weighted", g.weighted}});
  }
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& c : draws.chains)
    chains.push_back({{"chain", c.chain}, {"replicate", c.replicate}, {"seed", c.seed}});
  return {{"level", s.level}, {"draws", draws.draws.size()}, {"chains", chains}, {"waves", waves}};
}

}  // namespace lbcf
