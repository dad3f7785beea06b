#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace robggm {

// Broad failure class, used by the CLI to map exceptions to exit codes:
// user errors (bad input, bad config) exit 1, numeric failures exit 2.
enum class ErrorKind { user, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string type, const std::string& message)
      : std::runtime_error(message), kind_(kind), type_(std::move(type)) {}

  ErrorKind kind() const { return kind_; }

  // Stable machine-readable identifier, e.g. "not_positive_definite".
  const std::string& type() const { return type_; }

 private:
  ErrorKind kind_;
  std::string type_;
};

struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& msg)
      : Error(ErrorKind::numeric, "not_positive_definite", msg) {}
};

struct NonPositiveDiagonal : Error {
  explicit NonPositiveDiagonal(const std::string& msg)
      : Error(ErrorKind::numeric, "non_positive_diagonal", msg) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg)
      : Error(ErrorKind::user, "dimension_mismatch", msg) {}
};

struct NotSymmetric : Error {
  explicit NotSymmetric(const std::string& msg)
      : Error(ErrorKind::user, "not_symmetric", msg) {}
};

struct NonBinaryEntry : Error {
  explicit NonBinaryEntry(const std::string& msg)
      : Error(ErrorKind::user, "non_binary_entry", msg) {}
};

struct DegenerateData : Error {
  explicit DegenerateData(const std::string& msg)
      : Error(ErrorKind::numeric, "degenerate_data", msg) {}
};

struct IntegrationFailure : Error {
  explicit IntegrationFailure(const std::string& msg)
      : Error(ErrorKind::numeric, "integration_failure", msg) {}
};

struct BracketFailure : Error {
  explicit BracketFailure(const std::string& msg)
      : Error(ErrorKind::numeric, "bracket_failure", msg) {}
};

struct InvalidQuery : Error {
  explicit InvalidQuery(const std::string& msg)
      : Error(ErrorKind::user, "invalid_query", msg) {}
};

struct NegativeDeviance : Error {
  explicit NegativeDeviance(const std::string& msg)
      : Error(ErrorKind::numeric, "negative_deviance", msg) {}
};

struct LabelMismatch : Error {
  explicit LabelMismatch(const std::string& msg)
      : Error(ErrorKind::user, "label_mismatch", msg) {}
};

struct ParseError : Error {
  ParseError(const std::string& msg, long row, long column)
      : Error(ErrorKind::user, "parse_error", msg), row(row), column(column) {}
  long row;     // 1-based file line
  long column;  // 1-based cell index, 0 if not applicable

 protected:
  ParseError(std::string type, const std::string& msg, long row, long column)
      : Error(ErrorKind::user, std::move(type), msg), row(row), column(column) {}
};

struct RaggedRows : ParseError {
  RaggedRows(const std::string& msg, long row)
      : ParseError("ragged_rows", msg, row, 0) {}
};

struct NonNumericCell : ParseError {
  NonNumericCell(const std::string& msg, long row, long column)
      : ParseError("non_numeric_cell", msg, row, column) {}
};

struct EmptyFile : Error {
  explicit EmptyFile(const std::string& msg)
      : Error(ErrorKind::user, "empty_file", msg) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& msg)
      : Error(ErrorKind::user, "usage_error", msg) {}
};

}  // namespace robggm
