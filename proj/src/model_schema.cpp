#include "lbcf/model_schema.h"

#include <algorithm>
#include <cmath>

#include "lbcf/csv.h"
#include "lbcf/errors.h"

namespace lbcf {

std::string to_string(ForestKind kind) {
  switch (kind) {
    case ForestKind::Mu: return "mu";
    case ForestKind::Delta: return "delta";
    case ForestKind::Tau: return "tau";
  }
  return "?";
}

ForestKind forest_kind_from_string(const std::string& s) {
  if (s == "mu") return ForestKind::Mu;
  if (s == "delta") return ForestKind::Delta;
  if (s == "tau") return ForestKind::Tau;
  throw ValidationError("unknown forest kind '" + s + "' (expected mu, delta or tau)");
}

std::string BlockSchema::label() const {
  return kind == ForestKind::Mu ? "mu" : to_string(kind) + "." + std::to_string(wave);
}

std::vector<std::string> BlockSchema::column_names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

const BlockSchema& ModelSchema::block(ForestKind kind, int wave) const {
  for (const auto& b : blocks)
    if (b.kind == kind && (kind == ForestKind::Mu || b.wave == wave)) return b;
  throw SchemaError("no " + to_string(kind) + " block for wave " + std::to_string(wave));
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t ModelSchema::hash() const {
  std::uint64_t h = fnv1a("waves=" + std::to_string(waves));
  for (const auto& b : blocks) {
    h = fnv1a("|" + b.label() + ":", h);
    for (const auto& c : b.columns) h = fnv1a(c.name + ";", h);
  }
  for (const auto& [name, levels] : levels) {
    h = fnv1a("|" + name + "=", h);
    for (const auto& l : levels) h = fnv1a(l + ";", h);
  }
  return h;
}

namespace {

void add_covariates(BlockSchema& block, const PanelDataset& data, int max_wave) {
  for (const auto& cov : data.covariates) {
    if (cov.wave > max_wave) continue;
    const std::string header = cov.header();
    if (cov.type == ColumnType::Numeric) {
      block.columns.push_back({DesignColumn::Source::Covariate, header, header, header, {}, cov.wave});
    } else {
      for (const auto& level : cov.levels) {
        block.columns.push_back({DesignColumn::Source::Level,
                                 "x." + cov.name + "=" + level + "." + std::to_string(cov.wave),
                                 header, header, level, cov.wave});
      }
    }
  }
}

void add_history(BlockSchema& block, int wave) {
  for (int t = 1; t < wave; ++t) {
    const std::string n = "y." + std::to_string(t);
    block.columns.push_back({DesignColumn::Source::PriorOutcome, n, n, {}, {}, t});
  }
  for (int t = 2; t < wave; ++t) {
    const std::string n = "z." + std::to_string(t);
    block.columns.push_back({DesignColumn::Source::PriorTreatment, n, n, {}, {}, t});
  }
}

}  // namespace

ModelSchema make_schema(const PanelDataset& data) {
  ModelSchema s;
  s.waves = data.waves;
  for (const auto& cov : data.covariates)
    if (cov.type == ColumnType::Categorical) s.levels[cov.header()] = cov.levels;

  BlockSchema mu{ForestKind::Mu, 1, {}};
  add_covariates(mu, data, 1);
  s.blocks.push_back(std::move(mu));
  for (int w = 2; w <= data.waves; ++w) {
    BlockSchema delta{ForestKind::Delta, w, {}};
    add_covariates(delta, data, w);
    add_history(delta, w);
    const std::string pn = "pihat." + std::to_string(w);
    delta.columns.push_back({DesignColumn::Source::Propensity, pn, pn, {}, {}, w});
    BlockSchema tau{ForestKind::Tau, w, {}};
    add_covariates(tau, data, w);
    add_history(tau, w);
    s.blocks.push_back(std::move(delta));
    s.blocks.push_back(std::move(tau));
  }
  return s;
}

DesignMatrix build_design(const BlockSchema& block, const ModelSchema& schema,
                          const PanelDataset& data, std::span<const double> propensity,
                          std::vector<std::string>* warnings) {
  const std::size_t n = data.subjects();
  DesignMatrix x(block.column_names(), n);
  std::vector<double> col(n);
  // Level lookups are per source covariate; map this dataset's codes onto the
  // schema's level order once.
  std::map<std::string, std::vector<std::int32_t>> code_maps;
  for (std::size_t c = 0; c < block.columns.size(); ++c) {
    const DesignColumn& dc = block.columns[c];
    switch (dc.source) {
      case DesignColumn::Source::Covariate: {
        const Covariate* cov = data.find_covariate(dc.covariate);
        if (!cov) throw SchemaError("column " + dc.covariate + " required by " + block.label() + " is absent");
        if (cov->type != ColumnType::Numeric)
          throw SchemaError("column " + dc.covariate + " was numeric at training time");
        std::copy(cov->values.begin(), cov->values.end(), col.begin());
        break;
      }
      case DesignColumn::Source::Level: {
        const Covariate* cov = data.find_covariate(dc.covariate);
        if (!cov) throw SchemaError("column " + dc.covariate + " required by " + block.label() + " is absent");
        auto it = code_maps.find(dc.covariate);
        if (it == code_maps.end()) {
          const auto& trained = schema.levels.at(dc.covariate);
          std::vector<std::int32_t> map;
          if (cov->type == ColumnType::Categorical) {
            for (const auto& l : cov->levels) {
              const auto pos = std::find(trained.begin(), trained.end(), l);
              if (pos == trained.end()) {
                if (warnings)
                  warnings->push_back("unseen level '" + l + "' in " + dc.covariate +
                                      " encoded as all-zero indicators");
                map.push_back(-2);
              } else {
                map.push_back(static_cast<std::int32_t>(pos - trained.begin()));
              }
            }
          }
          it = code_maps.emplace(dc.covariate, std::move(map)).first;
        }
        const auto& trained = schema.levels.at(dc.covariate);
        const auto level_idx = static_cast<std::int32_t>(
            std::find(trained.begin(), trained.end(), dc.level) - trained.begin());
        for (std::size_t i = 0; i < n; ++i) {
          if (cov->type == ColumnType::Numeric) {
            // Every level in the new file looked numeric; match on text form.
            const double v = cov->values[i];
            col[i] = std::isnan(v) ? kMissing : (format_double(v) == dc.level ? 1.0 : 0.0);
            continue;
          }
          const std::int32_t code = cov->codes[i];
          if (code < 0) {
            col[i] = kMissing;
          } else {
            col[i] = it->second[code] == level_idx ? 1.0 : 0.0;
          }
        }
        break;
      }
      case DesignColumn::Source::PriorOutcome:
        if (dc.wave > data.waves) throw SchemaError("data has no wave " + std::to_string(dc.wave));
        for (std::size_t i = 0; i < n; ++i) col[i] = data.outcome(i, dc.wave);
        break;
      case DesignColumn::Source::PriorTreatment:
        if (dc.wave > data.waves) throw SchemaError("data has no wave " + std::to_string(dc.wave));
        for (std::size_t i = 0; i < n; ++i) {
          const auto z = data.treatment(i, dc.wave);
          col[i] = z == kMissingTreatment ? kMissing : static_cast<double>(z);
        }
        break;
      case DesignColumn::Source::Propensity:
        if (propensity.size() != n)
          throw SchemaError("propensity scores for " + block.label() + " have the wrong length");
        std::copy(propensity.begin(), propensity.end(), col.begin());
        break;
    }
    x.set_column(c, col);
  }
  return x;
}

nlohmann::json to_json(const ModelSchema& s) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : s.blocks) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : b.columns) {
      cols.push_back({{"name", c.name},
                      {"parent", c.parent},
                      {"source", static_cast<int>(c.source)},
                      {"covariate", c.covariate},
                      {"level", c.level},
                      {"wave", c.wave}});
    }
    blocks.push_back({{"kind", to_string(b.kind)}, {"wave", b.wave}, {"columns", cols}});
  }
  return {{"waves", s.waves}, {"blocks", blocks}, {"levels", s.levels},
          {"hash", std::to_string(s.hash())}};
}

ModelSchema schema_from_json(const nlohmann::json& j) {
  ModelSchema s;
  s.waves = j.at("waves").get<int>();
  s.levels = j.at("levels").get<std::map<std::string, std::vector<std::string>>>();
  for (const auto& jb : j.at("blocks")) {
    BlockSchema b;
    b.kind = forest_kind_from_string(jb.at("kind").get<std::string>());
    b.wave = jb.at("wave").get<int>();
    for (const auto& jc : jb.at("columns")) {
      DesignColumn c;
      c.name = jc.at("name").get<std::string>();
      c.parent = jc.at("parent").get<std::string>();
      c.source = static_cast<DesignColumn::Source>(jc.at("source").get<int>());
      c.covariate = jc.at("covariate").get<std::string>();
      c.level = jc.at("level").get<std::string>();
      c.wave = jc.at("wave").get<int>();
      b.columns.push_back(std::move(c));
    }
    s.blocks.push_back(std::move(b));
  }
  if (j.contains("hash") && j["hash"].get<std::string>() != std::to_string(s.hash()))
    throw SchemaError("schema hash mismatch in posterior-draw file");
  return s;
}

}  // namespace lbcf
