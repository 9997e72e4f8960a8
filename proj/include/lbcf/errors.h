#pragma once

#include <stdexcept>
#include <string>

namespace lbcf {

// Input failed a documented precondition (bad values, ragged masks, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input; carries the 1-based row and the column name when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, long row = -1, std::string column = {})
      : ValidationError(what), row_(row), column_(std::move(column)) {}
  long row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  long row_;
  std::string column_;
};

// A required column or block is absent, or two artifacts disagree on layout.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A tree references state that cannot exist (e.g. a feature outside its design).
class StructureError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The model is identifiable only under overlap; raised when a wave has no
// treated or no untreated subjects.
class EstimationRefused : public std::runtime_error {
 public:
  EstimationRefused(const std::string& what, int wave)
      : std::runtime_error(what), wave_(wave) {}
  int wave() const { return wave_; }

 private:
  int wave_;
};

}  // namespace lbcf
