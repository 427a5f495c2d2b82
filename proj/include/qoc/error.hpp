#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoc {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Requested accuracy threshold is not attainable for any QP > 0.
class InfeasibleAccuracyError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Translated constraints of an allocation problem cannot be met together.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::size_t vehicle)
      : std::runtime_error(what), vehicle_(vehicle) {}

  /// Zero-based index of the vehicle whose bound broke feasibility.
  std::size_t vehicle() const noexcept { return vehicle_; }

 private:
  std::size_t vehicle_;
};

/// Solver hit its iteration cap. Carries the best feasible iterate found.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> best)
      : std::runtime_error(what), best_(std::move(best)) {}

  const std::vector<double>& best_iterate() const noexcept { return best_; }

 private:
  std::vector<double> best_;
};

class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
      : std::runtime_error(what), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace qoc
