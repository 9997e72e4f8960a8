#include "lbcf/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lbcf/analysis.h"
#include "lbcf/benchmark.h"
#include "lbcf/csv.h"
#include "lbcf/dgp.h"
#include "lbcf/draws_io.h"
#include "lbcf/errors.h"
#include "lbcf/sampler.h"
#include "lbcf/version.h"

namespace lbcf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Fully resolved settings of one invocation. Output locations and the thread
// count are left out of the echoed config so that artifacts depend only on
// what determines their content.
struct RunConfig {
  std::string subcommand;
  fs::path data, draws, schema, out, out_dir = ".";
  HyperParams hp;
  std::uint64_t seed = 1;
  int chains = 1;
  std::string plausible_values = "auto";  // auto | on | off
  PropensityMethod propensity_method = PropensityMethod::ProbitForest;
  bool true_propensity = false;
  // Unset: taken from the --schema file, else the ingest defaults.
  std::optional<std::string> id_column, weight_column;
  bool store_forests = true;
  int threads = default_threads();
  double level = 0.95;
  int bins = 30;
  int dgp = 1;
  std::size_t n_train = 500, n_test = 1000, n = 500;
  double sigma = 1.0;
  bool null_effect = false;
  int reps = 100;
  std::vector<std::string> estimators{"lbcf"};

  json echo() const {
    json j{{"subcommand", subcommand}};
    const std::string& s = subcommand;
    if (s == "simulate" || s == "benchmark") {
      j["dgp"] = dgp;
      j["seed"] = seed;
      if (dgp == 1) {
        j["n_train"] = n_train;
        j["n_test"] = n_test;
        j["sigma"] = sigma;
        j["null_effect"] = null_effect;
      } else {
        j["n"] = n;
      }
    }
    if (s == "fit") {
      j["data"] = data.string();
      j["schema"] = schema.string();
      j["id_column"] = id_column ? json(*id_column) : json(nullptr);
      j["weight_column"] = weight_column ? json(*weight_column) : json(nullptr);
      j["seed"] = seed;
      j["chains"] = chains;
      j["plausible_values"] = plausible_values;
      j["store_forests"] = store_forests;
    }
    if (s == "fit" || s == "benchmark") {
      HyperParams h = hp;
      h.seed = seed;
      j["hyper"] = to_json(h);
      j["propensity_method"] = true_propensity ? "supplied" : to_string(propensity_method);
      j["true_propensity"] = true_propensity;
    }
    if (s == "predict" || s == "summarize") j["draws"] = draws.string();
    if (s == "predict") {
      j["data"] = data.string();
      j["schema"] = schema.string();
      j["id_column"] = id_column ? json(*id_column) : json(nullptr);
    }
    if (s == "predict" || s == "summarize" || s == "benchmark") j["level"] = level;
    if (s == "summarize") j["bins"] = bins;
    if (s == "benchmark") {
      j["reps"] = reps;
      j["estimators"] = estimators;
    }
    return j;
  }
};

std::vector<std::string> artifact_comments(const RunConfig& cfg) {
  return {std::string("lbcf ") + kVersion, "config: " + cfg.echo().dump()};
}

// Keys accepted in a --config file. Paths and all scalar settings may appear;
// hyperparameters go under "hyper".
void apply_config_file(RunConfig& cfg, const fs::path& path, bool& method_set, bool& truth_set) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config " + path.string() + " must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "data") cfg.data = v.get<std::string>();
      else if (key == "draws") cfg.draws = v.get<std::string>();
      else if (key == "schema") cfg.schema = v.get<std::string>();
      else if (key == "out") cfg.out = v.get<std::string>();
      else if (key == "out_dir") cfg.out_dir = v.get<std::string>();
      else if (key == "hyper") cfg.hp = hyper_from_json(v, cfg.hp);
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "chains") cfg.chains = v.get<int>();
      else if (key == "plausible_values") cfg.plausible_values = v.get<std::string>();
      else if (key == "propensity_method") {
        cfg.propensity_method = propensity_method_from_string(v.get<std::string>());
        method_set = true;
      } else if (key == "true_propensity") {
        cfg.true_propensity = v.get<bool>();
        truth_set = cfg.true_propensity;
      } else if (key == "id_column") cfg.id_column = v.get<std::string>();
      else if (key == "weight_column") cfg.weight_column = v.get<std::string>();
      else if (key == "store_forests") cfg.store_forests = v.get<bool>();
      else if (key == "threads") cfg.threads = v.get<int>();
      else if (key == "level") cfg.level = v.get<double>();
      else if (key == "bins") cfg.bins = v.get<int>();
      else if (key == "dgp") cfg.dgp = v.get<int>();
      else if (key == "n_train") cfg.n_train = v.get<std::size_t>();
      else if (key == "n_test") cfg.n_test = v.get<std::size_t>();
      else if (key == "n") cfg.n = v.get<std::size_t>();
      else if (key == "sigma") cfg.sigma = v.get<double>();
      else if (key == "null_effect") cfg.null_effect = v.get<bool>();
      else if (key == "reps") cfg.reps = v.get<int>();
      else if (key == "estimators") cfg.estimators = v.get<std::vector<std::string>>();
      else throw ValidationError("config " + path.string() + ": unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
}

struct HyperFlag {
  const char* flag;
  const char* key;
  bool integer;
};

constexpr HyperFlag kHyperFlags[] = {
    {"--n-mu", "n_mu", true},          {"--n-delta", "n_delta", true},
    {"--n-tau", "n_tau", true},        {"--n-burn", "n_burn", true},
    {"--n-save", "n_save", true},      {"--alpha-mu", "alpha_mu", false},
    {"--beta-mu", "beta_mu", false},   {"--alpha-delta", "alpha_delta", false},
    {"--beta-delta", "beta_delta", false}, {"--alpha-tau", "alpha_tau", false},
    {"--beta-tau", "beta_tau", false}, {"--sigma2-mu", "sigma2_mu", false},
    {"--sigma2-delta", "sigma2_delta", false}, {"--sigma2-tau", "sigma2_tau", false},
    {"--nu", "nu", false},             {"--lambda", "lambda", false},
};

// Flag values captured before they are merged over the config file.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> data, draws, schema, out, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains, threads, bins, dgp, reps;
  std::optional<std::string> plausible_values, propensity_method, id_column, weight_column;
  std::optional<double> level, sigma;
  std::optional<std::size_t> n_train, n_test, n;
  std::optional<std::string> estimators;
  bool true_propensity = false, no_forests = false, null_effect = false;
  std::map<std::string, std::string> hyper;  // key -> raw text
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags override its values");
  sub->add_option("--threads", f.threads, "worker threads (default: available cores)");
}

void add_hyper(CLI::App* sub, Flags& f) {
  for (const auto& h : kHyperFlags) {
    sub->add_option_function<std::string>(
        h.flag, [&f, key = h.key](const std::string& v) { f.hyper[key] = v; }, "hyperparameter");
  }
}

void add_dgp(CLI::App* sub, Flags& f) {
  sub->add_option("--dgp", f.dgp, "benchmark design: 1 or 2");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--n-train", f.n_train, "DGP1 training subjects");
  sub->add_option("--n-test", f.n_test, "DGP1 test subjects");
  sub->add_option("--n", f.n, "DGP2 subjects");
  sub->add_option("--sigma", f.sigma, "DGP1 noise sd");
  sub->add_flag("--null-effect", f.null_effect, "DGP1 with tau == 0");
}

void add_propensity(CLI::App* sub, Flags& f) {
  sub->add_option("--propensity-method", f.propensity_method, "logistic | probit_forest | supplied");
  sub->add_flag("--true-propensity", f.true_propensity, "use the supplied ps.<t> scores");
}

RunConfig resolve(const std::string& subcommand, const Flags& f) {
  RunConfig cfg;
  cfg.subcommand = subcommand;
  bool method_set = false, truth_set = false;
  if (f.config) apply_config_file(cfg, *f.config, method_set, truth_set);

  if (f.propensity_method && f.true_propensity)
    throw ValidationError("--true-propensity and --propensity-method are mutually exclusive");
  if (f.propensity_method) {
    cfg.propensity_method = propensity_method_from_string(*f.propensity_method);
    cfg.true_propensity = false;
  } else if (f.true_propensity) {
    cfg.true_propensity = true;
  } else if (method_set && truth_set) {
    throw ValidationError("config sets both true_propensity and propensity_method");
  }

  if (f.data) cfg.data = *f.data;
  if (f.draws) cfg.draws = *f.draws;
  if (f.schema) cfg.schema = *f.schema;
  if (f.out) cfg.out = *f.out;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.seed) cfg.seed = *f.seed;
  if (f.chains) cfg.chains = *f.chains;
  if (f.threads) cfg.threads = *f.threads;
  if (f.bins) cfg.bins = *f.bins;
  if (f.dgp) cfg.dgp = *f.dgp;
  if (f.reps) cfg.reps = *f.reps;
  if (f.plausible_values) cfg.plausible_values = *f.plausible_values;
  if (f.id_column) cfg.id_column = *f.id_column;
  if (f.weight_column) cfg.weight_column = *f.weight_column;
  if (f.level) cfg.level = *f.level;
  if (f.sigma) cfg.sigma = *f.sigma;
  if (f.n_train) cfg.n_train = *f.n_train;
  if (f.n_test) cfg.n_test = *f.n_test;
  if (f.n) cfg.n = *f.n;
  if (f.null_effect) cfg.null_effect = true;
  if (f.no_forests) cfg.store_forests = false;
  if (f.estimators) {
    cfg.estimators.clear();
    std::stringstream ss(*f.estimators);
    for (std::string id; std::getline(ss, id, ',');)
      if (!id.empty()) cfg.estimators.push_back(id);
  }
  if (!f.hyper.empty()) {
    json h = json::object();
    for (const auto& [key, text] : f.hyper) {
      json v;
      try {
        v = json::parse(text);
      } catch (const json::exception&) {
        throw ValidationError("hyperparameter " + key + ": '" + text + "' is not a number");
      }
      const bool integer = std::find_if(std::begin(kHyperFlags), std::end(kHyperFlags), [&](const HyperFlag& hf) {
                             return key == hf.key;
                           })->integer;
      if (!v.is_number() || (integer && !v.is_number_integer()))
        throw ValidationError("hyperparameter " + key + ": '" + text + "' is not a valid " +
                              (integer ? "integer" : "number"));
      h[key] = v;
    }
    cfg.hp = hyper_from_json(h, cfg.hp);
  }
  cfg.hp.seed = cfg.seed;

  if (cfg.threads < 1) throw ValidationError("--threads must be at least 1");
  if (cfg.chains < 1) throw ValidationError("--chains must be at least 1");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ValidationError("--level must lie in (0, 1)");
  if (cfg.bins < 1) throw ValidationError("--bins must be at least 1");
  if (cfg.plausible_values != "auto" && cfg.plausible_values != "on" && cfg.plausible_values != "off")
    throw ValidationError("--plausible-values must be auto, on or off");
  if (cfg.dgp != 1 && cfg.dgp != 2) throw ValidationError("--dgp must be 1 or 2");
  cfg.hp.validate();
  return cfg;
}

void require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw ValidationError(std::string("missing required ") + flag);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

SchemaSpec schema_spec(const RunConfig& cfg) {
  SchemaSpec spec = cfg.schema.empty() ? SchemaSpec{} : SchemaSpec::from_json_file(cfg.schema);
  if (cfg.id_column) spec.id_column = *cfg.id_column;
  if (cfg.weight_column) spec.weight_column = *cfg.weight_column;
  return spec;
}

void write_truth_dgp1(const fs::path& path, const PanelDataset& d, const Dgp1Truth& t,
                      const std::vector<std::string>& comments) {
  std::ofstream out = open_out(path);
  for (const auto& c : comments) out << "# " << c << '\n';
  write_csv_row(out, {"id", "mu", "delta.2", "tau.2", "ps.2"});
  for (std::size_t i = 0; i < d.subjects(); ++i)
    write_csv_row(out, {d.ids[i], format_double(t.mu[i]), format_double(t.delta[i]), format_double(t.tau[i]),
                        format_double(t.propensity[i])});
}

int cmd_simulate(const RunConfig& cfg, std::ostream& err) {
  const auto comments = artifact_comments(cfg);
  fs::create_directories(cfg.out_dir);
  if (cfg.dgp == 1) {
    Dgp1Options o;
    o.n_train = cfg.n_train;
    o.n_test = cfg.n_test;
    o.sigma = cfg.sigma;
    o.null_effect = cfg.null_effect;
    o.seed = cfg.seed;
    const Dgp1Instance d = gen_dgp1(o);
    {
      std::ofstream out = open_out(cfg.out_dir / "train.csv");
      write_csv(d.train, out, comments);
    }
    write_truth_dgp1(cfg.out_dir / "truth_train.csv", d.train, d.train_truth, comments);
    if (cfg.n_test > 0) {
      std::ofstream out = open_out(cfg.out_dir / "test.csv");
      write_csv(d.test, out, comments);
      write_truth_dgp1(cfg.out_dir / "truth_test.csv", d.test, d.test_truth, comments);
    }
  } else {
    Dgp2Options o;
    o.n = cfg.n;
    o.seed = cfg.seed;
    const Dgp2Instance d = gen_dgp2(o);
    {
      std::ofstream out = open_out(cfg.out_dir / "data.csv");
      write_csv(d.data, out, comments);
    }
    std::ofstream out = open_out(cfg.out_dir / "truth.csv");
    for (const auto& c : comments) out << "# " << c << '\n';
    std::vector<std::string> header{"id", "a.1"};
    for (int w = 2; w <= d.data.waves; ++w) {
      header.push_back("ps." + std::to_string(w));
      header.push_back("tau." + std::to_string(w));
    }
    write_csv_row(out, header);
    for (std::size_t i = 0; i < d.data.subjects(); ++i) {
      std::vector<std::string> row{d.data.ids[i], format_double(d.baseline_treatment[i])};
      for (int w = 2; w <= d.data.waves; ++w) {
        row.push_back(format_double(d.propensity[w - 2][i]));
        row.push_back(format_double(d.ate[w - 2]));
      }
      write_csv_row(out, row);
    }
  }
  err << "simulate: wrote DGP" << cfg.dgp << " files to " << cfg.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& err) {
  require_path(cfg.data, "--data");
  require_path(cfg.out, "--out");
  PanelDataset data = load_csv(cfg.data, schema_spec(cfg));
  for (const auto& w : data.warnings) err << "warning: " << w << '\n';
  if (cfg.plausible_values == "off") data.plausible_values.clear();
  if (cfg.plausible_values == "on" && data.plausible_values.empty())
    throw ValidationError("--plausible-values on, but the data has no pv.<k>.y.<t> columns");

  FitOptions opts;
  opts.propensity_method = cfg.true_propensity ? PropensityMethod::Supplied : cfg.propensity_method;
  opts.store_forests = cfg.store_forests;
  std::mutex log_mu;
  opts.progress = [&](int chain, int iter, int total) {
    if (iter % 100 != 0 && iter != total) return;
    std::lock_guard<std::mutex> lock(log_mu);
    err << "chain " << chain << ": " << iter << "/" << total << '\n';
  };
  PosteriorDraws draws = fit_chains(data, cfg.hp, opts, cfg.chains, cfg.threads);
  draws.config = {{"version", kVersion}, {"run", cfg.echo()}};
  write_draws_file(cfg.out, draws);
  err << "fit: " << draws.chains.size() << " chain(s), " << draws.draws.size() << " pooled draws -> "
      << cfg.out.string() << '\n';
  return kExitOk;
}

std::string cell(const Interval& iv, double Interval::*field) {
  const double v = iv.*field;
  return format_double(v);
}

int cmd_predict(const RunConfig& cfg, std::ostream& err) {
  require_path(cfg.draws, "--draws");
  require_path(cfg.data, "--data");
  require_path(cfg.out, "--out");
  const PosteriorDraws draws = read_draws_file(cfg.draws);
  const PanelDataset data = load_csv(cfg.data, schema_spec(cfg));
  std::vector<std::string> warnings = data.warnings;
  const Prediction p = predict(draws, data, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';

  std::ofstream out = open_out(cfg.out);
  for (const auto& c : artifact_comments(cfg)) out << "# " << c << '\n';
  write_csv_row(out, {"id", "wave", "mu_mean", "mu_lo", "mu_hi", "delta_mean", "delta_lo", "delta_hi", "tau_mean",
                      "tau_lo", "tau_hi", "yhat_mean", "yhat_lo", "yhat_hi"});
  const std::size_t nd = p.mu.size();
  std::vector<double> buf(nd);
  auto summarize = [&](auto get) -> std::array<std::string, 3> {
    for (std::size_t d = 0; d < nd; ++d) buf[d] = get(d);
    if (std::any_of(buf.begin(), buf.end(), [](double v) { return std::isnan(v); })) return {"NA", "NA", "NA"};
    const Interval iv = summarize_sample(buf, cfg.level);
    return {cell(iv, &Interval::mean), cell(iv, &Interval::lo), cell(iv, &Interval::hi)};
  };
  const std::array<std::string, 3> na{"NA", "NA", "NA"};
  for (std::size_t i = 0; i < data.subjects(); ++i) {
    const auto mu = summarize([&](std::size_t d) { return p.mu[d][i]; });
    for (int t = 1; t <= draws.waves; ++t) {
      std::vector<std::string> row{data.ids[i], std::to_string(t), mu[0], mu[1], mu[2]};
      const auto delta = t > 1 ? summarize([&](std::size_t d) { return p.delta[d][t - 2][i]; }) : na;
      const auto tau = t > 1 ? summarize([&](std::size_t d) { return p.tau[d][t - 2][i]; }) : na;
      const auto yhat = summarize([&](std::size_t d) { return p.yhat[d][t - 1][i]; });
      row.insert(row.end(), delta.begin(), delta.end());
      row.insert(row.end(), tau.begin(), tau.end());
      row.insert(row.end(), yhat.begin(), yhat.end());
      write_csv_row(out, row);
    }
  }
  err << "predict: " << data.subjects() << " subjects x " << draws.waves << " waves -> " << cfg.out.string() << '\n';
  return kExitOk;
}

int cmd_summarize(const RunConfig& cfg, std::ostream& err) {
  require_path(cfg.draws, "--draws");
  const PosteriorDraws draws = read_draws_file(cfg.draws);
  const EffectSummary s = summarize_effects(draws, cfg.level);
  const auto comments = artifact_comments(cfg);
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out = open_out(cfg.out_dir / "effects.csv");
    write_effects_csv(out, draws, s, comments);
  }
  {
    std::ofstream out = open_out(cfg.out_dir / "ate_samples.csv");
    write_ate_samples_csv(out, s, comments);
  }
  for (const auto& we : s.waves) {
    std::ofstream out = open_out(cfg.out_dir / ("ate_hist." + std::to_string(we.wave) + ".dat"));
    write_histogram(out, we.ate, cfg.bins, comments);
  }
  const bool have_forests = !draws.draws.empty() && !draws.draws.front().forests.empty();
  if (have_forests) {
    for (const char* block : {"mu", "delta", "tau"}) {
      std::ofstream out = open_out(cfg.out_dir / (std::string("importance_") + block + ".csv"));
      write_importance_csv(out, variable_importance(draws, block), comments);
    }
  } else {
    err << "warning: draw file has no stored forests; skipping variable importance\n";
  }
  json report = summary_report(draws, s);
  report["version"] = kVersion;
  report["config"] = cfg.echo();
  report["fit_config"] = draws.config;
  std::ofstream out = open_out(cfg.out_dir / "summary.json");
  out << report.dump(2) << '\n';
  err << "summarize: " << draws.draws.size() << " draws -> " << cfg.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_benchmark(const RunConfig& cfg, std::ostream& err) {
  BenchmarkConfig b;
  b.dgp = cfg.dgp;
  b.n_reps = cfg.reps;
  b.estimators = cfg.estimators;
  b.seed = cfg.seed;
  b.dgp1.n_train = cfg.n_train;
  b.dgp1.n_test = cfg.n_test;
  b.dgp1.sigma = cfg.sigma;
  b.dgp1.null_effect = cfg.null_effect;
  b.dgp2.n = cfg.n;
  b.hp = cfg.hp;
  b.propensity_method = cfg.propensity_method;
  b.true_propensity = cfg.true_propensity;
  b.level = cfg.level;
  b.threads = cfg.threads;
  fs::create_directories(cfg.out_dir);
  b.records_path = cfg.out_dir / "records.csv";
  b.comments = {std::string("lbcf ") + kVersion};
  std::mutex log_mu;
  b.log = [&](const std::string& line) {
    std::lock_guard<std::mutex> lock(log_mu);
    err << line << '\n';
  };
  const SimReport report = run_benchmark(b);
  json j = to_json(report);
  j["version"] = kVersion;
  j["run"] = cfg.echo();
  {
    std::ofstream out = open_out(cfg.out_dir / "report.json");
    out << j.dump(2) << '\n';
  }
  std::ofstream out = open_out(cfg.out_dir / "table.txt");
  for (const auto& c : artifact_comments(cfg)) out << "# " << c << '\n';
  write_report_table(out, report);
  write_report_table(err, report);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Longitudinal Bayesian causal forests for panel data", "lbcf"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags f;

  CLI::App* sim = app.add_subcommand("simulate", "write a benchmark dataset and its ground truth");
  add_common(sim, f);
  add_dgp(sim, f);
  sim->add_option("--out-dir", f.out_dir, "output directory");

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit the model and write a pooled draw file");
  add_common(fit_cmd, f);
  add_hyper(fit_cmd, f);
  add_propensity(fit_cmd, f);
  fit_cmd->add_option("--data", f.data, "panel CSV");
  fit_cmd->add_option("--schema", f.schema, "column type overrides (JSON)");
  fit_cmd->add_option("--id-column", f.id_column, "subject id column");
  fit_cmd->add_option("--weight-column", f.weight_column, "sampling weight column");
  fit_cmd->add_option("--out", f.out, "draw file to write");
  fit_cmd->add_option("--seed", f.seed, "master seed");
  fit_cmd->add_option("--chains", f.chains, "chains when the data has no plausible values");
  fit_cmd->add_option("--plausible-values", f.plausible_values, "auto | on | off");
  fit_cmd->add_flag("--no-forests", f.no_forests, "do not store forests (disables predict and importance)");

  CLI::App* pred = app.add_subcommand("predict", "apply a draw file to new data");
  add_common(pred, f);
  pred->add_option("--draws", f.draws, "draw file");
  pred->add_option("--data", f.data, "panel CSV of new subjects");
  pred->add_option("--schema", f.schema, "column type overrides (JSON)");
  pred->add_option("--id-column", f.id_column, "subject id column");
  pred->add_option("--out", f.out, "prediction CSV");
  pred->add_option("--level", f.level, "credible level");

  CLI::App* summ = app.add_subcommand("summarize", "ATE, ICATE and variable importance reports");
  add_common(summ, f);
  summ->add_option("--draws", f.draws, "draw file");
  summ->add_option("--out-dir", f.out_dir, "output directory");
  summ->add_option("--level", f.level, "credible level");
  summ->add_option("--bins", f.bins, "ATE histogram bins");

  CLI::App* bench = app.add_subcommand("benchmark", "run the simulation study");
  add_common(bench, f);
  add_dgp(bench, f);
  add_hyper(bench, f);
  add_propensity(bench, f);
  bench->add_option("--reps", f.reps, "replications");
  bench->add_option("--estimators", f.estimators, "comma-separated: lbcf,bart_diff");
  bench->add_option("--level", f.level, "credible level");
  bench->add_option("--out-dir", f.out_dir, "output directory (records.csv is resumed)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitInvalid;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = resolve(name, f);
    if (name == "simulate") return cmd_simulate(cfg, err);
    if (name == "fit") return cmd_fit(cfg, err);
    if (name == "predict") return cmd_predict(cfg, err);
    if (name == "summarize") return cmd_summarize(cfg, err);
    return cmd_benchmark(cfg, err);
  } catch (const EstimationRefused& e) {
    err << "estimation refused (wave " << e.wave() << "): " << e.what() << '\n';
    return kExitRefused;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace lbcf
