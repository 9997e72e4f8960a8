#include "lbcf/panel.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "lbcf/csv.h"
#include "lbcf/errors.h"

namespace lbcf {

bool PanelDataset::observed(std::size_t i, int t) const { return !std::isnan(outcome(i, t)); }

int PanelDataset::last_wave(std::size_t i) const {
  int last = 0;
  for (int t = 1; t <= waves; ++t)
    if (observed(i, t)) last = t;
  return last;
}

std::size_t PanelDataset::observed_count() const {
  return static_cast<std::size_t>(
      std::count_if(y.begin(), y.end(), [](double v) { return !std::isnan(v); }));
}

const Covariate* PanelDataset::find_covariate(const std::string& header) const {
  for (const auto& c : covariates)
    if (c.header() == header) return &c;
  return nullptr;
}

void PanelDataset::validate() const {
  const std::size_t n = subjects();
  if (waves < 1) throw ValidationError("dataset needs at least one wave");
  if (y.size() != n * waves || z.size() != n * waves || weights.size() != n) {
    throw ValidationError("dataset arrays do not match subjects x waves");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw ValidationError("duplicate subject id '" + id + "'");

  std::vector<std::string> broken;
  for (std::size_t i = 0; i < n; ++i) {
    for (int t = 2; t <= waves; ++t) {
      if (observed(i, t) && !observed(i, t - 1)) {
        broken.push_back(ids[i]);
        break;
      }
    }
  }
  if (!broken.empty()) {
    std::string list;
    for (std::size_t k = 0; k < broken.size() && k < 20; ++k) list += (k ? ", " : "") + broken[k];
    if (broken.size() > 20) list += ", ...";
    throw ValidationError("non-monotone dropout (outcome observed after a missing wave) for " +
                          std::to_string(broken.size()) + " subject(s): " + list);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int t = 1; t <= waves; ++t) {
      const auto zv = treatment(i, t);
      if (zv != 0 && zv != 1 && zv != kMissingTreatment)
        throw ValidationError("treatment values must be 0, 1 or missing");
    }
  }
  bool positive = false;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("sampling weights must be finite and >= 0");
    positive = positive || w > 0.0;
  }
  if (n > 0 && !positive) throw ValidationError("at least one sampling weight must be positive");
  for (std::size_t k = 0; k < plausible_values.size(); ++k) {
    const auto& pv = plausible_values[k];
    if (pv.size() != y.size())
      throw ValidationError("plausible value set " + std::to_string(k + 1) + " has wrong shape");
    for (std::size_t c = 0; c < pv.size(); ++c) {
      if (std::isnan(pv[c]) != std::isnan(y[c])) {
        throw ValidationError("plausible value set " + std::to_string(k + 1) +
                              " does not share the outcome observation mask (subject '" +
                              ids[c / waves] + "', wave " + std::to_string(c % waves + 1) + ")");
      }
    }
  }
  for (const auto& c : covariates) {
    const std::size_t len = c.type == ColumnType::Numeric ? c.values.size() : c.codes.size();
    if (len != n) throw ValidationError("covariate " + c.header() + " has wrong length");
    if (c.wave < 1 || c.wave > waves)
      throw ValidationError("covariate " + c.header() + " is tagged with a wave outside 1.." +
                            std::to_string(waves));
  }
}

SchemaSpec SchemaSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema spec " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("schema spec " + path.string() + ": " + e.what());
  }
  SchemaSpec spec;
  spec.id_column = j.value("id_column", spec.id_column);
  spec.weight_column = j.value("weight_column", spec.weight_column);
  if (j.contains("types")) {
    for (const auto& [col, type] : j["types"].items()) {
      const std::string t = type.get<std::string>();
      if (t == "numeric") {
        spec.types[col] = ColumnType::Numeric;
      } else if (t == "categorical") {
        spec.types[col] = ColumnType::Categorical;
      } else {
        throw ParseError("schema spec: unknown column type '" + t + "' for " + col);
      }
    }
  }
  return spec;
}

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

struct ColumnRole {
  enum Kind { Id, Weight, Outcome, Treatment, Covariate, Plausible, Propensity, Unknown } kind = Unknown;
  int wave = 0;
  int replicate = 0;
  std::string name;
};

ColumnRole classify(const std::string& h, const SchemaSpec& spec) {
  ColumnRole role;
  if (h == spec.id_column) {
    role.kind = ColumnRole::Id;
    return role;
  }
  if (h == spec.weight_column) {
    role.kind = ColumnRole::Weight;
    return role;
  }
  const auto last_dot = h.rfind('.');
  if (last_dot == std::string::npos) return role;
  int wave = 0;
  if (!parse_int(std::string_view(h).substr(last_dot + 1), wave)) return role;
  const std::string head = h.substr(0, last_dot);
  role.wave = wave;
  if (head == "y") {
    role.kind = ColumnRole::Outcome;
  } else if (head == "z") {
    role.kind = ColumnRole::Treatment;
  } else if (head == "ps") {
    role.kind = ColumnRole::Propensity;
  } else if (head.rfind("x.", 0) == 0 && head.size() > 2) {
    role.kind = ColumnRole::Covariate;
    role.name = head.substr(2);
  } else if (head.rfind("pv.", 0) == 0 && head.size() > 5 && head.substr(head.size() - 2) == ".y") {
    int k = 0;
    if (parse_int(std::string_view(head).substr(3, head.size() - 5), k) && k >= 1) {
      role.kind = ColumnRole::Plausible;
      role.replicate = k;
    }
  }
  return role;
}

double numeric_cell(const std::string& text, long row, const std::string& column) {
  if (is_na(text)) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  if (!parse_double(text, v)) {
    throw ParseError("non-numeric value '" + text + "' in column " + column + " at row " +
                         std::to_string(row),
                     row, column);
  }
  return v;
}

}  // namespace

PanelDataset parse_panel(std::istream& in, const SchemaSpec& spec) {
  const CsvTable table = read_csv(in);
  const std::size_t n = table.rows.size();
  std::vector<ColumnRole> roles;
  int waves = 0;
  int replicates = 0;
  std::set<std::string> seen_headers;
  for (const auto& h : table.header) {
    if (!seen_headers.insert(h).second) throw ParseError("duplicate column '" + h + "'", 1, h);
    roles.push_back(classify(h, spec));
    const auto& r = roles.back();
    if (r.kind == ColumnRole::Outcome) waves = std::max(waves, r.wave);
    if (r.kind == ColumnRole::Plausible) replicates = std::max(replicates, r.replicate);
  }
  if (waves < 1) throw SchemaError("no outcome columns (y.<t>) found");

  PanelDataset d;
  d.waves = waves;
  d.ids.resize(n);
  d.y.assign(n * waves, std::numeric_limits<double>::quiet_NaN());
  d.z.assign(n * waves, kMissingTreatment);
  d.weights.assign(n, 1.0);
  d.plausible_values.assign(replicates, std::vector<double>(n * waves, std::numeric_limits<double>::quiet_NaN()));

  std::vector<bool> have_y(waves + 1, false), have_z(waves + 1, false);
  std::vector<std::vector<bool>> have_pv(replicates + 1, std::vector<bool>(waves + 1, false));
  bool have_id = false;

  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& h = table.header[c];
    const ColumnRole& role = roles[c];
    auto cell = [&](std::size_t r) -> const std::string& { return table.rows[r][c]; };
    const long row0 = static_cast<long>(table.comments.size()) + 2;  // 1-based line of first data row
    switch (role.kind) {
      case ColumnRole::Id:
        have_id = true;
        for (std::size_t r = 0; r < n; ++r) d.ids[r] = cell(r);
        break;
      case ColumnRole::Weight:
        for (std::size_t r = 0; r < n; ++r) {
          const double w = numeric_cell(cell(r), row0 + r, h);
          d.weights[r] = std::isnan(w) ? 1.0 : w;
        }
        break;
      case ColumnRole::Outcome:
        if (role.wave < 1) throw SchemaError("outcome column " + h + " has wave < 1");
        have_y[role.wave] = true;
        for (std::size_t r = 0; r < n; ++r)
          d.y[r * waves + role.wave - 1] = numeric_cell(cell(r), row0 + r, h);
        break;
      case ColumnRole::Treatment:
        if (role.wave < 2 || role.wave > waves)
          throw SchemaError("treatment column " + h + " must have wave in 2.." + std::to_string(waves));
        have_z[role.wave] = true;
        for (std::size_t r = 0; r < n; ++r) {
          const std::string& s = cell(r);
          std::int8_t v = kMissingTreatment;
          if (!is_na(s)) {
            double x = 0.0;
            if (!parse_double(s, x) || (x != 0.0 && x != 1.0)) {
              throw ParseError("treatment cell '" + s + "' not in {0,1,NA} at row " +
                                   std::to_string(row0 + r) + ", column " + h,
                               row0 + static_cast<long>(r), h);
            }
            v = static_cast<std::int8_t>(x);
          }
          d.z[r * waves + role.wave - 1] = v;
        }
        break;
      case ColumnRole::Plausible:
        if (role.wave < 1 || role.wave > waves) throw SchemaError("plausible value column " + h + " has no matching y.<t>");
        have_pv[role.replicate][role.wave] = true;
        for (std::size_t r = 0; r < n; ++r)
          d.plausible_values[role.replicate - 1][r * waves + role.wave - 1] = numeric_cell(cell(r), row0 + r, h);
        break;
      case ColumnRole::Propensity: {
        auto& ps = d.supplied_propensity[role.wave];
        ps.resize(n);
        for (std::size_t r = 0; r < n; ++r) ps[r] = numeric_cell(cell(r), row0 + r, h);
        break;
      }
      case ColumnRole::Covariate: {
        Covariate cov;
        cov.name = role.name;
        cov.wave = role.wave;
        const auto override_it = spec.types.find(h);
        bool numeric = true;
        if (override_it != spec.types.end()) {
          numeric = override_it->second == ColumnType::Numeric;
        } else {
          double tmp = 0.0;
          for (std::size_t r = 0; r < n && numeric; ++r)
            numeric = is_na(cell(r)) || parse_double(cell(r), tmp);
        }
        if (numeric) {
          cov.type = ColumnType::Numeric;
          cov.values.resize(n);
          for (std::size_t r = 0; r < n; ++r) cov.values[r] = numeric_cell(cell(r), row0 + r, h);
        } else {
          cov.type = ColumnType::Categorical;
          cov.codes.resize(n);
          std::map<std::string, std::int32_t> index;
          for (std::size_t r = 0; r < n; ++r) {
            const std::string& s = cell(r);
            if (is_na(s)) {
              cov.codes[r] = -1;
              continue;
            }
            auto [it, inserted] = index.emplace(s, static_cast<std::int32_t>(cov.levels.size()));
            if (inserted) cov.levels.push_back(s);
            cov.codes[r] = it->second;
          }
        }
        d.covariates.push_back(std::move(cov));
        break;
      }
      case ColumnRole::Unknown:
        d.warnings.push_back("ignoring unrecognised column '" + h + "'");
        break;
    }
  }
  for (int t = 1; t <= waves; ++t)
    if (!have_y[t]) throw SchemaError("missing outcome column y." + std::to_string(t));
  for (int t = 2; t <= waves; ++t)
    if (!have_z[t]) throw SchemaError("missing treatment column z." + std::to_string(t));
  for (int k = 1; k <= replicates; ++k)
    for (int t = 1; t <= waves; ++t)
      if (!have_pv[k][t])
        throw SchemaError("missing plausible value column pv." + std::to_string(k) + ".y." + std::to_string(t));
  if (!have_id)
    for (std::size_t r = 0; r < n; ++r) d.ids[r] = std::to_string(r + 1);
  d.validate();
  return d;
}

PanelDataset load_csv(const std::filesystem::path& path, const SchemaSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_panel(in, spec);
}

void write_csv(const PanelDataset& d, std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  std::vector<std::string> header{"id"};
  for (int t = 1; t <= d.waves; ++t) header.push_back("y." + std::to_string(t));
  for (int t = 2; t <= d.waves; ++t) header.push_back("z." + std::to_string(t));
  for (const auto& c : d.covariates) header.push_back(c.header());
  header.push_back("weight");
  for (std::size_t k = 0; k < d.plausible_values.size(); ++k)
    for (int t = 1; t <= d.waves; ++t)
      header.push_back("pv." + std::to_string(k + 1) + ".y." + std::to_string(t));
  for (const auto& [t, _] : d.supplied_propensity) header.push_back("ps." + std::to_string(t));
  write_csv_row(out, header);

  std::vector<std::string> row;
  for (std::size_t i = 0; i < d.subjects(); ++i) {
    row.clear();
    row.push_back(d.ids[i]);
    for (int t = 1; t <= d.waves; ++t) row.push_back(format_double(d.outcome(i, t)));
    for (int t = 2; t <= d.waves; ++t) {
      const auto v = d.treatment(i, t);
      row.push_back(v == kMissingTreatment ? "NA" : std::to_string(v));
    }
    for (const auto& c : d.covariates) {
      if (c.type == ColumnType::Numeric) {
        row.push_back(format_double(c.values[i]));
      } else {
        row.push_back(c.codes[i] < 0 ? "NA" : c.levels[c.codes[i]]);
      }
    }
    row.push_back(format_double(d.weights[i]));
    for (const auto& pv : d.plausible_values)
      for (int t = 1; t <= d.waves; ++t) row.push_back(format_double(pv[i * d.waves + t - 1]));
    for (const auto& [t, ps] : d.supplied_propensity) row.push_back(format_double(ps[i]));
    write_csv_row(out, row);
  }
}

Standardizer fit_standardizer(const PanelDataset& d) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : d.y) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  if (n < 2) throw ValidationError("need at least two observed outcomes to standardize");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d.y)
    if (!std::isnan(v)) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw ValidationError("outcome has zero variance; cannot standardize");
  return {mean, sd};
}

std::pair<PanelDataset, Standardizer> standardize_outcomes(const PanelDataset& d) {
  const Standardizer s = fit_standardizer(d);
  PanelDataset out = d;
  for (double& v : out.y)
    if (!std::isnan(v)) v = s.standardize(v);
  return {std::move(out), s};
}

std::vector<PanelDataset> plausible_value_views(const PanelDataset& d) {
  if (d.plausible_values.empty()) throw ValidationError("dataset has no plausible values");
  d.validate();
  std::vector<PanelDataset> views;
  views.reserve(d.plausible_values.size());
  for (std::size_t k = 0; k < d.plausible_values.size(); ++k) {
    PanelDataset v = d;
    v.y = d.plausible_values[k];
    v.plausible_values.clear();
    v.replicate = static_cast<int>(k) + 1;
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace lbcf
