#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbcf/design_matrix.h"
#include "lbcf/panel.h"

namespace lbcf {

enum class ForestKind : std::uint8_t { Mu, Delta, Tau };

std::string to_string(ForestKind kind);
ForestKind forest_kind_from_string(const std::string& s);

// Where a design column's values come from.
struct DesignColumn {
  enum class Source : std::uint8_t { Covariate, Level, PriorOutcome, PriorTreatment, Propensity };
  Source source = Source::Covariate;
  std::string name;    // design column name
  std::string parent;  // variable the column belongs to (one-hot level -> categorical)
  std::string covariate;  // source covariate header for Covariate/Level
  std::string level;      // Level only
  int wave = 0;           // PriorOutcome/PriorTreatment/Propensity
};

// Design layout of one forest block: MU (wave 1), or DELTA/TAU for wave w >= 2.
struct BlockSchema {
  ForestKind kind = ForestKind::Mu;
  int wave = 1;
  std::vector<DesignColumn> columns;

  std::string label() const;  // "mu", "delta.2", "tau.3"
  std::vector<std::string> column_names() const;
};

struct ModelSchema {
  int waves = 0;
  std::vector<BlockSchema> blocks;  // mu, then delta.w, tau.w for w = 2..T
  std::map<std::string, std::vector<std::string>> levels;  // categorical header -> levels

  const BlockSchema& block(ForestKind kind, int wave) const;
  // Design used to estimate the wave-w propensity score: the TAU block layout.
  const BlockSchema& propensity_block(int wave) const { return block(ForestKind::Tau, wave); }
  std::uint64_t hash() const;
};

// Layout derived from the training data: MU sees wave-1 covariates; DELTA_w
// and TAU_w see covariates tagged <= w, outcomes y.1..y.(w-1) and treatments
// z.2..z.(w-1); DELTA_w also sees the propensity score for wave w.
ModelSchema make_schema(const PanelDataset& data);

// Materialises a block's design on `data`. `propensity` supplies the wave
// score for DELTA blocks (ignored otherwise). Unseen categorical levels
// become all-zero indicator rows and are reported through `warnings`.
// Throws SchemaError when a source column is absent.
DesignMatrix build_design(const BlockSchema& block, const ModelSchema& schema,
                          const PanelDataset& data, std::span<const double> propensity,
                          std::vector<std::string>* warnings = nullptr);

nlohmann::json to_json(const ModelSchema& schema);
ModelSchema schema_from_json(const nlohmann::json& j);

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL);

}  // namespace lbcf
