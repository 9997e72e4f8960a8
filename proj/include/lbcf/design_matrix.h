#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace lbcf {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double x) { return std::isnan(x); }

// Column-major covariate matrix; NaN marks a missing cell. Each column also
// carries the rank of every cell among the column's sorted distinct observed
// values, so split proposals can enumerate distinct values in O(rows).
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(std::vector<std::string> names, std::size_t rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  double operator()(std::size_t row, std::size_t col) const { return data_[col * rows_ + row]; }
  std::span<const double> column(std::size_t col) const {
    return {data_.data() + col * rows_, rows_};
  }

  void set_column(std::size_t col, std::span<const double> values);
  // Copy of row `row` (NaN for missing), convenient for one-off traversal.
  std::vector<double> row(std::size_t row) const;

  // -1 for missing cells.
  std::int32_t rank(std::size_t row, std::size_t col) const { return ranks_[col * rows_ + row]; }
  std::size_t distinct_count(std::size_t col) const { return distinct_[col].size(); }
  double distinct_value(std::size_t col, std::int32_t rank) const { return distinct_[col][rank]; }

 private:
  void index_column(std::size_t col);

  std::vector<std::string> names_;
  std::size_t rows_ = 0;
  std::vector<double> data_;
  std::vector<std::int32_t> ranks_;
  std::vector<std::vector<double>> distinct_;
};

}  // namespace lbcf
