#include "lbcf/design_matrix.h"

#include <algorithm>
#include <stdexcept>

namespace lbcf {

DesignMatrix::DesignMatrix(std::vector<std::string> names, std::size_t rows)
    : names_(std::move(names)),
      rows_(rows),
      data_(names_.size() * rows, kMissing),
      ranks_(names_.size() * rows, -1),
      distinct_(names_.size()) {}

void DesignMatrix::set_column(std::size_t col, std::span<const double> values) {
  if (col >= cols() || values.size() != rows_) {
    throw std::out_of_range("DesignMatrix::set_column: shape mismatch");
  }
  std::copy(values.begin(), values.end(), data_.begin() + col * rows_);
  index_column(col);
}

std::vector<double> DesignMatrix::row(std::size_t r) const {
  std::vector<double> out(cols());
  for (std::size_t c = 0; c < cols(); ++c) out[c] = (*this)(r, c);
  return out;
}

void DesignMatrix::index_column(std::size_t col) {
  auto& distinct = distinct_[col];
  distinct.clear();
  const auto values = column(col);
  for (double v : values) {
    if (!is_missing(v)) distinct.push_back(v);
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (std::size_t r = 0; r < rows_; ++r) {
    const double v = values[r];
    ranks_[col * rows_ + r] =
        is_missing(v) ? -1
                      : static_cast<std::int32_t>(
                            std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
  }
}

}  // namespace lbcf
