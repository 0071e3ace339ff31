#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace negpanel {

// Failures split into two families; the CLI maps them to exit codes 1 and 2.
enum class ErrorKind { Validation, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

// neg_core
struct InvalidEconomy : ValidationError {
  using ValidationError::ValidationError;
};
struct NonPositiveInput : ValidationError {
  using ValidationError::ValidationError;
};
struct NonPositiveWage : NonPositiveInput {
  using NonPositiveInput::NonPositiveInput;
};
struct DegenerateLabor : NumericalError {
  using NumericalError::NumericalError;
};
struct NoConvergence : NumericalError {
  NoConvergence(long iterations, double residual)
      : NumericalError("fixed point did not converge after " + std::to_string(iterations) +
                       " iterations (residual " + std::to_string(residual) + ")"),
        iterations(iterations),
        residual(residual) {}
  long iterations;
  double residual;
};

// panel
struct InvalidDesign : ValidationError {
  using ValidationError::ValidationError;
};
struct RankDeficient : NumericalError {
  explicit RankDeficient(std::vector<std::string> cols);
  std::vector<std::string> columns;
};
struct AllWithinVariationZero : NumericalError {
  explicit AllWithinVariationZero(std::string col)
      : NumericalError("regressor '" + col + "' has no within-unit variation"), column(std::move(col)) {}
  std::string column;
};
struct NoConsecutivePairs : ValidationError {
  NoConsecutivePairs() : ValidationError("no unit has two consecutive periods") {}
};
struct NameMismatch : ValidationError {
  using ValidationError::ValidationError;
};

// specs
struct MissingColumn : ValidationError {
  explicit MissingColumn(const std::string& col) : ValidationError("missing column: " + col) {}
};
struct NonPositiveValue : ValidationError {
  using ValidationError::ValidationError;
};
struct ZeroDenominator : ValidationError {
  using ValidationError::ValidationError;
};
struct LeaderMissing : ValidationError {
  using ValidationError::ValidationError;
};
struct WeightMismatch : ValidationError {
  using ValidationError::ValidationError;
};
struct NonPositiveWeight : ValidationError {
  using ValidationError::ValidationError;
};
struct IncompleteCell : ValidationError {
  using ValidationError::ValidationError;
};
struct EmptySample : ValidationError {
  using ValidationError::ValidationError;
};
struct UnknownSpec : ValidationError {
  explicit UnknownSpec(const std::string& name) : ValidationError("unknown spec: " + name) {}
};

// datagen
struct SchemaMismatch : ValidationError {
  using ValidationError::ValidationError;
};
struct ParseError : ValidationError {
  ParseError(long row, const std::string& column, const std::string& detail)
      : ValidationError("parse error at row " + std::to_string(row) + ", column '" + column + "': " + detail),
        row(row),
        column(column) {}
  long row;
  std::string column;
};
struct DuplicateKey : ValidationError {
  using ValidationError::ValidationError;
};
struct BadCoefficientNames : ValidationError {
  using ValidationError::ValidationError;
};

// report
struct SpecMismatch : ValidationError {
  using ValidationError::ValidationError;
};

inline RankDeficient::RankDeficient(std::vector<std::string> cols)
    : NumericalError([&] {
        std::string msg = "design is rank deficient; collinear columns:";
        for (const auto& c : cols) msg += " " + c;
        return msg;
      }()),
      columns(std::move(cols)) {}

}  // namespace negpanel
