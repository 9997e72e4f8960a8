#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lbcf {

enum class ColumnType { Numeric, Categorical };

inline constexpr std::int8_t kMissingTreatment = -1;

// One covariate column `x.<name>.<wave>`; `wave` is the first wave at which it
// is available.
struct Covariate {
  std::string name;
  int wave = 1;
  ColumnType type = ColumnType::Numeric;
  std::vector<double> values;        // numeric; NaN = missing
  std::vector<std::int32_t> codes;   // categorical; -1 = missing
  std::vector<std::string> levels;   // categorical level labels, first-seen order

  std::string header() const { return "x." + name + "." + std::to_string(wave); }
};

// Wide-format panel: one row per subject, waves 1..T. Outcomes may drop out
// monotonically; treatments are defined for waves 2..T.
struct PanelDataset {
  std::vector<std::string> ids;
  int waves = 0;
  std::vector<double> y;             // subjects x waves, row-major, NaN = missing
  std::vector<std::int8_t> z;        // subjects x waves; column 0 unused
  std::vector<Covariate> covariates;
  std::vector<double> weights;
  std::vector<std::vector<double>> plausible_values;  // each subjects x waves
  std::map<int, std::vector<double>> supplied_propensity;  // `ps.<t>` columns
  int replicate = -1;  // plausible-value index of a view, -1 for the base data
  std::vector<std::string> warnings;

  std::size_t subjects() const { return ids.size(); }
  double outcome(std::size_t i, int t) const { return y[i * waves + (t - 1)]; }
  bool observed(std::size_t i, int t) const;
  std::int8_t treatment(std::size_t i, int t) const { return z[i * waves + (t - 1)]; }
  // Last wave with an observed outcome, 0 if none.
  int last_wave(std::size_t i) const;
  std::size_t observed_count() const;
  const Covariate* find_covariate(const std::string& header) const;

  // Throws ValidationError on any broken invariant.
  void validate() const;
};

// Column typing overrides and special column names for CSV ingestion.
struct SchemaSpec {
  std::string id_column = "id";
  std::string weight_column = "weight";
  std::map<std::string, ColumnType> types;

  static SchemaSpec from_json_file(const std::filesystem::path& path);
};

PanelDataset load_csv(const std::filesystem::path& path, const SchemaSpec& spec = {});
PanelDataset parse_panel(std::istream& in, const SchemaSpec& spec = {});
// Writes the dataset back in the same convention; `comments` become leading
// '#' lines.
void write_csv(const PanelDataset& data, std::ostream& out,
               const std::vector<std::string>& comments = {});

struct Standardizer {
  double mean = 0.0;
  double sd = 1.0;

  double standardize(double v) const { return (v - mean) / sd; }
  double destandardize(double v) const { return v * sd + mean; }
  // Differences (growth, effects) only scale.
  double rescale(double v) const { return v * sd; }
};

// Pooled mean and sample SD over every observed outcome.
Standardizer fit_standardizer(const PanelDataset& data);
std::pair<PanelDataset, Standardizer> standardize_outcomes(const PanelDataset& data);

// One single-outcome dataset per plausible-value replicate.
std::vector<PanelDataset> plausible_value_views(const PanelDataset& data);

}  // namespace lbcf
