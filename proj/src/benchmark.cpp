#include "lbcf/benchmark.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "lbcf/csv.h"
#include "lbcf/errors.h"
#include "lbcf/tree_sampler.h"

namespace lbcf {

ErrorMetrics evaluate_metrics(std::span<const double> truth, std::span<const double> estimate,
                              std::span<const double> lo, std::span<const double> hi) {
  const std::size_t n = truth.size();
  if (estimate.size() != n || lo.size() != n || hi.size() != n)
    throw ValidationError("truth, estimate and interval vectors must have equal length");
  if (n == 0) throw ValidationError("no rows to evaluate");
  double se = 0.0, ae = 0.0, covered = 0.0, width = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = truth[i] - estimate[i];
    se += e * e;
    ae += std::abs(e);
    covered += (lo[i] <= truth[i] && truth[i] <= hi[i]) ? 1.0 : 0.0;
    width += hi[i] - lo[i];
  }
  const double dn = static_cast<double>(n);
  return {std::sqrt(se / dn), ae / dn, covered / dn, width / dn};
}

namespace {

ErrorMetrics interval_metrics(const std::vector<double>& truth, const std::vector<Interval>& est) {
  std::vector<double> m, lo, hi;
  for (const auto& e : est) {
    m.push_back(e.mean);
    lo.push_back(e.lo);
    hi.push_back(e.hi);
  }
  return evaluate_metrics(truth, m, lo, hi);
}

std::vector<Interval> row_intervals(const std::vector<std::vector<double>>& per_draw, double level) {
  if (per_draw.empty()) return {};
  const std::size_t n = per_draw.front().size();
  std::vector<Interval> out(n);
  std::vector<double> col(per_draw.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < per_draw.size(); ++d) col[d] = per_draw[d][i];
    out[i] = summarize_sample(col, level);
  }
  return out;
}

// Plain BART on one continuous response; calls `on_save` with the current
// forest after each post-burn-in sweep. The response must be standardized.
template <typename OnSave>
void run_bart(const DesignMatrix& x, std::span<const double> y, const BartDiffSettings& s, Rng& rng,
              OnSave on_save) {
  const std::size_t n = y.size();
  TreeSamplerSettings ts;
  ts.alpha = s.alpha;
  ts.beta = s.beta;
  ts.leaf.variance = 1.0 / s.n_trees;
  ts.min_leaf_size = s.min_leaf_size;
  std::vector<Tree> trees(s.n_trees);
  std::vector<std::vector<double>> fits(s.n_trees, std::vector<double>(n, 0.0));
  std::vector<double> resid(y.begin(), y.end()), sums(n), counts(n, 1.0), fresh(n);
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  TreeSampler sampler;
  double sigma2 = 1.0;
  for (int iter = 0; iter < s.n_burn + s.n_save; ++iter) {
    for (int j = 0; j < s.n_trees; ++j) {
      for (std::size_t i = 0; i < n; ++i) sums[i] = resid[i] + fits[j][i];
      sampler.step(trees[j], ForestUnits{&x, rows, counts, sums}, sigma2, ts, rng);
      tree_fits(trees[j], x, fresh);
      for (std::size_t i = 0; i < n; ++i) resid[i] = sums[i] - fresh[i];
      fits[j].swap(fresh);
    }
    sigma2 = update_sigma2(resid, s.nu, s.lambda, rng);
    if (iter >= s.n_burn) on_save(trees);
  }
}

DesignMatrix with_treatment(const DesignMatrix& base, std::span<const std::size_t> rows,
                            std::span<const double> z) {
  std::vector<std::string> names = base.names();
  names.push_back("z");
  DesignMatrix x(names, rows.size());
  std::vector<double> col(rows.size());
  for (std::size_t c = 0; c < base.cols(); ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) col[r] = base(rows[r], c);
    x.set_column(c, col);
  }
  x.set_column(base.cols(), z);
  return x;
}

}  // namespace

EstimateSet bart_diff(const SimInstance& inst, const BartDiffSettings& s, double level, std::uint64_t seed) {
  const PanelDataset& train = inst.train;
  const PanelDataset& eval = inst.eval();
  const ModelSchema schema = make_schema(train);
  EstimateSet out;
  for (int w = 2; w <= train.waves; ++w) {
    const BlockSchema& block = schema.block(ForestKind::Tau, w);
    const DesignMatrix base = build_design(block, schema, train, {});
    std::vector<std::size_t> fit_rows, present;
    std::vector<double> g, zf;
    for (std::size_t i = 0; i < train.subjects(); ++i) {
      if (train.last_wave(i) < w) continue;
      present.push_back(i);
      const auto z = train.treatment(i, w);
      if (z == kMissingTreatment) continue;
      fit_rows.push_back(i);
      g.push_back(train.outcome(i, w) - train.outcome(i, w - 1));
      zf.push_back(z);
    }
    if (fit_rows.size() < 2) throw ValidationError("too few subjects observed at wave " + std::to_string(w));
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    double ss = 0.0;
    for (double v : g) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(g.size() - 1));
    if (!(sd > 0.0)) throw ValidationError("differenced outcome has zero variance");
    for (double& v : g) v = (v - mean) / sd;
    const DesignMatrix x = with_treatment(base, fit_rows, zf);

    const DesignMatrix eval_base = build_design(block, schema, eval, {});
    std::vector<std::size_t> eval_rows(eval.subjects());
    for (std::size_t i = 0; i < eval_rows.size(); ++i) eval_rows[i] = i;
    const DesignMatrix e0 = with_treatment(eval_base, eval_rows, std::vector<double>(eval_rows.size(), 0.0));
    const DesignMatrix e1 = with_treatment(eval_base, eval_rows, std::vector<double>(eval_rows.size(), 1.0));
    const DesignMatrix a0 = with_treatment(base, present, std::vector<double>(present.size(), 0.0));
    const DesignMatrix a1 = with_treatment(base, present, std::vector<double>(present.size(), 1.0));

    std::vector<std::vector<double>> delta_draws, tau_draws;
    std::vector<double> ate_draws;
    std::vector<double> f0(eval_rows.size()), f1(eval_rows.size()), scratch;
    Rng rng(seed, 0xbd0 + static_cast<std::uint64_t>(w));
    run_bart(x, g, s, rng, [&](const std::vector<Tree>& trees) {
      std::fill(f0.begin(), f0.end(), 0.0);
      std::fill(f1.begin(), f1.end(), 0.0);
      for (const auto& t : trees) {
        for (std::size_t i = 0; i < eval_rows.size(); ++i) {
          f0[i] += t.node(t.leaf_for(e0, i)).leaf_value;
          f1[i] += t.node(t.leaf_for(e1, i)).leaf_value;
        }
      }
      std::vector<double> dd(eval_rows.size()), tt(eval_rows.size());
      for (std::size_t i = 0; i < eval_rows.size(); ++i) {
        dd[i] = mean + sd * f0[i];
        tt[i] = sd * (f1[i] - f0[i]);
      }
      delta_draws.push_back(std::move(dd));
      tau_draws.push_back(std::move(tt));
      double ate = 0.0;
      for (const auto& t : trees)
        for (std::size_t i = 0; i < present.size(); ++i)
          ate += t.node(t.leaf_for(a1, i)).leaf_value - t.node(t.leaf_for(a0, i)).leaf_value;
      ate_draws.push_back(sd * ate / static_cast<double>(present.size()));
    });
    WaveEstimate we;
    we.wave = w;
    we.delta = row_intervals(delta_draws, level);
    we.tau = row_intervals(tau_draws, level);
    we.ate = summarize_sample(ate_draws, level);
    out.waves.push_back(std::move(we));
  }
  return out;
}

EstimateSet lbcf_estimate(const SimInstance& inst, const HyperParams& hp, const FitOptions& options,
                          double level, std::uint64_t seed) {
  HyperParams h = hp;
  h.seed = seed;
  FitOptions o = options;
  o.store_forests = false;
  o.test = inst.test ? &*inst.test : nullptr;
  const PosteriorDraws draws = fit(inst.train, h, o);
  EstimateSet out;
  for (int w = 2; w <= draws.waves; ++w) {
    std::vector<std::vector<double>> dd, tt;
    for (const auto& d : draws.draws) {
      dd.push_back(inst.test ? d.test_delta[w - 2] : d.delta[w - 2]);
      tt.push_back(inst.test ? d.test_tau[w - 2] : d.tau[w - 2]);
    }
    WaveEstimate we;
    we.wave = w;
    we.delta = row_intervals(dd, level);
    we.tau = row_intervals(tt, level);
    we.ate = summarize_sample(ate_posterior(draws, w), level);
    out.waves.push_back(std::move(we));
  }
  return out;
}

nlohmann::json BenchmarkConfig::to_json() const {
  nlohmann::json j{{"dgp", dgp},
                   {"n_reps", n_reps},
                   {"estimators", estimators},
                   {"seed", seed},
                   {"hyper", lbcf::to_json(hp)},
                   {"propensity", true_propensity ? "true" : lbcf::to_string(propensity_method)},
                   {"bart_diff", {{"n_trees", bart.n_trees}, {"n_burn", bart.n_burn}, {"n_save", bart.n_save}}},
                   {"level", level}};
  if (dgp == 1) {
    j["dgp1"] = {{"n_train", dgp1.n_train}, {"n_test", dgp1.n_test}, {"sigma", dgp1.sigma},
                 {"null_effect", dgp1.null_effect}};
  } else {
    j["dgp2"] = {{"n", dgp2.n}};
  }
  return j;
}

SimInstance make_instance(const BenchmarkConfig& cfg, std::uint64_t rep_seed) {
  SimInstance inst;
  inst.dgp = cfg.dgp;
  if (cfg.dgp == 1) {
    Dgp1Options o = cfg.dgp1;
    o.seed = rep_seed;
    Dgp1Instance d = gen_dgp1(o);
    SimInstance::WaveTruth t;
    t.wave = 2;
    if (o.n_test > 0) {
      t.delta = d.test_truth.delta;
      t.tau = d.test_truth.tau;
      inst.test = std::move(d.test);
    } else {
      t.delta = d.train_truth.delta;
      t.tau = d.train_truth.tau;
    }
    double s = 0.0;
    for (double v : d.train_truth.tau) s += v;
    t.ate = s / static_cast<double>(d.train_truth.tau.size());
    inst.train = std::move(d.train);
    inst.truth.push_back(std::move(t));
  } else if (cfg.dgp == 2) {
    Dgp2Options o = cfg.dgp2;
    o.seed = rep_seed;
    Dgp2Instance d = gen_dgp2(o);
    for (int w = 2; w <= d.data.waves; ++w) {
      SimInstance::WaveTruth t;
      t.wave = w;
      t.tau.assign(d.data.subjects(), d.ate[w - 2]);
      t.ate = d.ate[w - 2];
      inst.truth.push_back(std::move(t));
    }
    inst.train = std::move(d.data);
  } else {
    throw ValidationError("unknown DGP " + std::to_string(cfg.dgp) + " (expected 1 or 2)");
  }
  return inst;
}

std::vector<ReplicationRecord> score_replication(const SimInstance& inst, const EstimateSet& est, int rep,
                                                 const std::string& estimator, std::uint64_t seed) {
  std::vector<ReplicationRecord> out;
  for (const auto& truth : inst.truth) {
    const WaveEstimate* we = nullptr;
    for (const auto& e : est.waves)
      if (e.wave == truth.wave) we = &e;
    if (!we) throw ValidationError("estimator " + estimator + " returned no wave " + std::to_string(truth.wave));
    ReplicationRecord r;
    r.rep = rep;
    r.estimator = estimator;
    r.wave = truth.wave;
    r.seed = seed;
    const ErrorMetrics tm = interval_metrics(truth.tau, we->tau);
    r.pehe = tm.rmse;
    r.bias_tau = tm.bias;
    r.coverage_tau = tm.coverage;
    r.width_tau = tm.width;
    if (truth.delta.empty()) {
      r.rmse_delta = r.bias_delta = r.coverage_delta = r.width_delta = kMissing;
    } else {
      const ErrorMetrics dm = interval_metrics(truth.delta, we->delta);
      r.rmse_delta = dm.rmse;
      r.bias_delta = dm.bias;
      r.coverage_delta = dm.coverage;
      r.width_delta = dm.width;
    }
    r.ate_truth = truth.ate;
    r.ate_mean = we->ate.mean;
    r.ate_lo = we->ate.lo;
    r.ate_hi = we->ate.hi;
    out.push_back(r);
  }
  return out;
}

std::vector<AggregateRow> aggregate_records(const std::vector<ReplicationRecord>& records) {
  std::map<std::pair<std::string, int>, AggregateRow> acc;
  std::vector<std::pair<std::string, int>> order;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.estimator, r.wave);
    auto [it, inserted] = acc.try_emplace(key);
    if (inserted) order.push_back(key);
    AggregateRow& a = it->second;
    a.estimator = r.estimator;
    a.wave = r.wave;
    a.reps += 1;
    a.rmse_delta += r.rmse_delta;
    a.pehe += r.pehe;
    a.bias_delta += r.bias_delta;
    a.bias_tau += r.bias_tau;
    a.coverage_delta += r.coverage_delta;
    a.coverage_tau += r.coverage_tau;
    a.width_delta += r.width_delta;
    a.width_tau += r.width_tau;
    a.ate_bias += std::abs(r.ate_mean - r.ate_truth);
    a.ate_coverage += (r.ate_lo <= r.ate_truth && r.ate_truth <= r.ate_hi) ? 1.0 : 0.0;
    a.ate_width += r.ate_hi - r.ate_lo;
  }
  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    AggregateRow a = acc[key];
    const double n = static_cast<double>(a.reps);
    for (double* v : {&a.rmse_delta, &a.pehe, &a.bias_delta, &a.bias_tau, &a.coverage_delta, &a.coverage_tau,
                      &a.width_delta, &a.width_tau, &a.ate_bias, &a.ate_coverage, &a.ate_width})
      *v /= n;
    out.push_back(a);
  }
  return out;
}

const AggregateRow& SimReport::aggregate(const std::string& estimator, int wave) const {
  for (const auto& a : aggregates)
    if (a.estimator == estimator && a.wave == wave) return a;
  throw ValidationError("report has no aggregate for " + estimator + " at wave " + std::to_string(wave));
}

namespace {

const std::vector<std::string> kRecordColumns = {
    "rep",         "estimator",    "wave",        "seed",           "rmse_delta", "pehe",
    "bias_delta",  "bias_tau",     "coverage_delta", "coverage_tau", "width_delta", "width_tau",
    "ate_truth",   "ate_mean",     "ate_lo",      "ate_hi"};

std::vector<std::string> record_fields(const ReplicationRecord& r) {
  return {std::to_string(r.rep),        r.estimator,
          std::to_string(r.wave),       std::to_string(r.seed),
          format_double(r.rmse_delta),  format_double(r.pehe),
          format_double(r.bias_delta),  format_double(r.bias_tau),
          format_double(r.coverage_delta), format_double(r.coverage_tau),
          format_double(r.width_delta), format_double(r.width_tau),
          format_double(r.ate_truth),   format_double(r.ate_mean),
          format_double(r.ate_lo),      format_double(r.ate_hi)};
}

double field_double(const std::string& s) {
  if (is_na(s)) return kMissing;
  double v = 0.0;
  if (!parse_double(s, v)) throw ParseError("bad number '" + s + "' in replication records");
  return v;
}

// Drops a partial last line left by an interrupted run so appends start clean.
void trim_torn_tail(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  if (text.empty() || text.back() == '\n') return;
  const auto cut = text.find_last_of('\n');
  std::filesystem::resize_file(path, cut == std::string::npos ? 0 : cut + 1);
}

std::vector<ReplicationRecord> load_records(const std::filesystem::path& path,
                                            const std::vector<std::string>& comments) {
  std::vector<ReplicationRecord> out;
  if (!std::filesystem::exists(path)) return out;
  trim_torn_tail(path);
  const CsvTable t = read_csv_file(path.string());
  if (t.header.empty()) return out;
  if (t.header != kRecordColumns) throw SchemaError("replication record file " + path.string() + " has an unexpected header");
  std::vector<std::string> found;
  for (const auto& c : t.comments) found.push_back(c.substr(c.rfind("# ", 0) == 0 ? 2 : 1));
  if (found != comments)
    throw SchemaError("replication record file " + path.string() + " was written under a different configuration");
  for (const auto& row : t.rows) {
    if (row.size() != kRecordColumns.size()) throw ParseError("malformed row in " + path.string());
    ReplicationRecord r;
    r.rep = std::stoi(row[0]);
    r.estimator = row[1];
    r.wave = std::stoi(row[2]);
    r.seed = std::stoull(row[3]);
    r.rmse_delta = field_double(row[4]);
    r.pehe = field_double(row[5]);
    r.bias_delta = field_double(row[6]);
    r.bias_tau = field_double(row[7]);
    r.coverage_delta = field_double(row[8]);
    r.coverage_tau = field_double(row[9]);
    r.width_delta = field_double(row[10]);
    r.width_tau = field_double(row[11]);
    r.ate_truth = field_double(row[12]);
    r.ate_mean = field_double(row[13]);
    r.ate_lo = field_double(row[14]);
    r.ate_hi = field_double(row[15]);
    out.push_back(r);
  }
  return out;
}

}  // namespace

SimReport run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.n_reps < 1) throw ValidationError("n_reps must be positive");
  std::map<std::string, EstimatorFn> estimators;
  for (const auto& id : cfg.estimators) {
    if (cfg.custom.count(id)) {
      estimators[id] = cfg.custom.at(id);
    } else if (id == "lbcf") {
      FitOptions o;
      o.propensity_method = cfg.true_propensity ? PropensityMethod::Supplied : cfg.propensity_method;
      estimators[id] = [&cfg, o](const SimInstance& inst, std::uint64_t seed) {
        return lbcf_estimate(inst, cfg.hp, o, cfg.level, seed);
      };
    } else if (id == "bart_diff") {
      estimators[id] = [&cfg](const SimInstance& inst, std::uint64_t seed) {
        return bart_diff(inst, cfg.bart, cfg.level, seed);
      };
    } else {
      throw ValidationError("unknown estimator '" + id + "' (expected lbcf or bart_diff)");
    }
  }

  SimReport report;
  report.config = cfg.to_json();
  std::vector<ReplicationRecord> done;
  std::vector<std::string> comments = cfg.comments;
  // Records depend on neither the run length nor the other estimators, so
  // the stamp leaves both out and a run can be extended in place.
  nlohmann::json stamp = report.config;
  stamp.erase("n_reps");
  stamp.erase("estimators");
  comments.push_back("config: " + stamp.dump());
  if (!cfg.records_path.empty()) done = load_records(cfg.records_path, comments);
  std::set<std::pair<int, std::string>> finished;
  for (const auto& r : done) finished.emplace(r.rep, r.estimator);

  std::ofstream sink;
  if (!cfg.records_path.empty()) {
    const bool fresh = !std::filesystem::exists(cfg.records_path) ||
                       std::filesystem::file_size(cfg.records_path) == 0;
    sink.open(cfg.records_path, std::ios::app);
    if (!sink) throw ValidationError("cannot write " + cfg.records_path.string());
    if (fresh) {
      for (const auto& c : comments) sink << "# " << c << '\n';
      write_csv_row(sink, kRecordColumns);
    }
    sink.flush();
  }

  std::mutex mu;
  std::vector<ReplicationRecord> records = done;
  std::exception_ptr failure;
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < cfg.n_reps; k = next++) {
      try {
        bool all_done = true;
        for (const auto& id : cfg.estimators) all_done = all_done && finished.count({k, id});
        if (all_done) continue;
        const std::uint64_t rep_seed = cfg.seed ^ static_cast<std::uint64_t>(k);
        const SimInstance inst = make_instance(cfg, rep_seed);
        for (const auto& id : cfg.estimators) {
          if (finished.count({k, id})) continue;
          const EstimateSet est = estimators.at(id)(inst, derive_seed(rep_seed, 7));
          const auto recs = score_replication(inst, est, k, id, rep_seed);
          std::lock_guard<std::mutex> lock(mu);
          for (const auto& r : recs) {
            records.push_back(r);
            if (sink.is_open()) write_csv_row(sink, record_fields(r));
          }
          if (sink.is_open()) sink.flush();
          if (cfg.log) cfg.log("replication " + std::to_string(k + 1) + "/" + std::to_string(cfg.n_reps) + " " + id + " done");
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next = cfg.n_reps;
      }
    }
  };
  const int n_threads = std::clamp(cfg.threads, 1, cfg.n_reps);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::erase_if(records, [&](const ReplicationRecord& r) {
    return r.rep >= cfg.n_reps ||
           std::find(cfg.estimators.begin(), cfg.estimators.end(), r.estimator) == cfg.estimators.end();
  });
  std::sort(records.begin(), records.end(), [&](const ReplicationRecord& a, const ReplicationRecord& b) {
    const auto ia = std::find(cfg.estimators.begin(), cfg.estimators.end(), a.estimator);
    const auto ib = std::find(cfg.estimators.begin(), cfg.estimators.end(), b.estimator);
    return std::tie(a.rep, ia, a.wave) < std::tie(b.rep, ib, b.wave);
  });
  report.records = std::move(records);
  report.aggregates = aggregate_records(report.records);
  return report;
}

nlohmann::json to_json(const SimReport& report) {
  auto num = [](double v) -> nlohmann::json { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json agg = nlohmann::json::array();
  for (const auto& a : report.aggregates) {
    agg.push_back({{"estimator", a.estimator},
                   {"wave", a.wave},
                   {"reps", a.reps},
                   {"rmse_delta", num(a.rmse_delta)},
                   {"pehe", num(a.pehe)},
                   {"bias_delta", num(a.bias_delta)},
                   {"bias_tau", num(a.bias_tau)},
                   {"coverage_delta", num(a.coverage_delta)},
                   {"coverage_tau", num(a.coverage_tau)},
                   {"width_delta", num(a.width_delta)},
                   {"width_tau", num(a.width_tau)},
                   {"ate_bias", num(a.ate_bias)},
                   {"ate_coverage", num(a.ate_coverage)},
                   {"ate_width", num(a.ate_width)}});
  }
  return {{"config", report.config}, {"replications", report.records.size()}, {"aggregates", agg}};
}

void write_report_table(std::ostream& out, const SimReport& report) {
  auto cell = [](double v) {
    std::ostringstream s;
    if (std::isnan(v)) {
      s << std::setw(9) << "-";
    } else {
      s << std::setw(9) << std::fixed << std::setprecision(3) << v;
    }
    return s.str();
  };
  const int dgp = report.config.value("dgp", 1);
  if (dgp == 1) {
    out << "estimator      RMSE(d)     PEHE  Bias(d)  Bias(t)   Cov(d)   Cov(t)  Width(d) Width(t)   ATEcov\n";
    for (const auto& a : report.aggregates) {
      out << std::left << std::setw(12) << a.estimator << std::right << cell(a.rmse_delta) << cell(a.pehe)
          << cell(a.bias_delta) << cell(a.bias_tau) << cell(a.coverage_delta) << cell(a.coverage_tau)
          << cell(a.width_delta) << cell(a.width_tau) << cell(a.ate_coverage) << '\n';
    }
  } else {
    out << "estimator   wave  ATE bias  Coverage    Width\n";
    for (const auto& a : report.aggregates) {
      out << std::left << std::setw(12) << a.estimator << std::right << std::setw(4) << a.wave
          << cell(a.ate_bias) << " " << cell(a.ate_coverage) << cell(a.ate_width) << '\n';
    }
  }
}

}  // namespace lbcf
