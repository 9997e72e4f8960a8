#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbcf/analysis.h"
#include "lbcf/dgp.h"
#include "lbcf/sampler.h"

namespace lbcf {

struct ErrorMetrics {
  double rmse = 0.0;
  double bias = 0.0;      // mean |truth - estimate|
  double coverage = 0.0;  // share of intervals containing the truth
  double width = 0.0;     // mean hi - lo
};

// Throws ValidationError on length mismatch or empty input.
ErrorMetrics evaluate_metrics(std::span<const double> truth, std::span<const double> estimate,
                              std::span<const double> lo, std::span<const double> hi);

// One benchmark dataset with its ground truth on the evaluation rows (test
// rows for DGP1, training rows for DGP2).
struct SimInstance {
  int dgp = 1;
  PanelDataset train;
  std::optional<PanelDataset> test;
  struct WaveTruth {
    int wave = 2;
    std::vector<double> delta;  // empty when the design has no closed-form growth
    std::vector<double> tau;
    double ate = 0.0;  // over training subjects observed at the wave
  };
  std::vector<WaveTruth> truth;
  const PanelDataset& eval() const { return test ? *test : train; }
};

struct WaveEstimate {
  int wave = 2;
  std::vector<Interval> delta;  // per evaluation row
  std::vector<Interval> tau;
  Interval ate;
};

struct EstimateSet {
  std::vector<WaveEstimate> waves;
};

using EstimatorFn = std::function<EstimateSet(const SimInstance&, std::uint64_t seed)>;

struct BartDiffSettings {
  int n_trees = 200;
  double alpha = 0.95;
  double beta = 2.0;
  double nu = 3.0;
  double lambda = 0.1;
  int n_burn = 500;
  int n_save = 500;
  std::size_t min_leaf_size = 5;
};

// Single BART on the differenced outcome y_w - y_(w-1), with the wave's
// treatment as an extra covariate. tau = f(x, 1) - f(x, 0), delta = f(x, 0).
EstimateSet bart_diff(const SimInstance& inst, const BartDiffSettings& settings, double level,
                      std::uint64_t seed);

EstimateSet lbcf_estimate(const SimInstance& inst, const HyperParams& hp, const FitOptions& options,
                          double level, std::uint64_t seed);

struct BenchmarkConfig {
  int dgp = 1;
  int n_reps = 100;
  std::vector<std::string> estimators{"lbcf"};
  std::uint64_t seed = 1;
  Dgp1Options dgp1;
  Dgp2Options dgp2;
  HyperParams hp;
  PropensityMethod propensity_method = PropensityMethod::ProbitForest;
  bool true_propensity = false;  // DGP1/DGP2: feed the generating scores to LBCF
  BartDiffSettings bart;
  double level = 0.95;
  int threads = 1;
  // Append-only per-replication CSV; finished replications found there are
  // not re-run. Empty disables persistence.
  std::filesystem::path records_path;
  // Leading '#' lines of a fresh record file; the serialized config is always
  // appended, and a resumed file must carry the same lines.
  std::vector<std::string> comments;
  // Extra estimators by id (e.g. mocks in tests).
  std::map<std::string, EstimatorFn> custom;
  std::function<void(const std::string&)> log;

  nlohmann::json to_json() const;
};

SimInstance make_instance(const BenchmarkConfig& cfg, std::uint64_t rep_seed);

struct ReplicationRecord {
  int rep = 0;
  std::string estimator;
  int wave = 2;
  std::uint64_t seed = 0;
  double rmse_delta = 0.0;
  double pehe = 0.0;
  double bias_delta = 0.0;
  double bias_tau = 0.0;
  double coverage_delta = 0.0;
  double coverage_tau = 0.0;
  double width_delta = 0.0;
  double width_tau = 0.0;
  double ate_truth = 0.0;
  double ate_mean = 0.0;
  double ate_lo = 0.0;
  double ate_hi = 0.0;
};

struct AggregateRow {
  std::string estimator;
  int wave = 2;
  std::size_t reps = 0;
  double rmse_delta = 0.0;
  double pehe = 0.0;
  double bias_delta = 0.0;
  double bias_tau = 0.0;
  double coverage_delta = 0.0;
  double coverage_tau = 0.0;
  double width_delta = 0.0;
  double width_tau = 0.0;
  double ate_bias = 0.0;      // mean |ATE estimate - truth|
  double ate_coverage = 0.0;  // share of ATE intervals containing the truth
  double ate_width = 0.0;
};

struct SimReport {
  nlohmann::json config;
  std::vector<ReplicationRecord> records;  // sorted by rep, estimator, wave
  std::vector<AggregateRow> aggregates;
  const AggregateRow& aggregate(const std::string& estimator, int wave) const;
};

std::vector<ReplicationRecord> score_replication(const SimInstance& inst, const EstimateSet& est,
                                                 int rep, const std::string& estimator,
                                                 std::uint64_t seed);
std::vector<AggregateRow> aggregate_records(const std::vector<ReplicationRecord>& records);

SimReport run_benchmark(const BenchmarkConfig& cfg);

nlohmann::json to_json(const SimReport& report);
void write_report_table(std::ostream& out, const SimReport& report);

}  // namespace lbcf
