#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace relemit {

// Every failure raised by the library derives from Error. The CLI maps the
// category to its exit code (see exit_code()).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (ω <= 0, |v| >= c).
class DomainError : public Error {
public:
  using Error::Error;
};

// Material model inconsistent with passivity or causality.
class ModelError : public Error {
public:
  using Error::Error;
};

// A user-facing configuration value violates a constraint. `field` names the
// offending key path, e.g. "atom.velocity".
class ValidationError : public Error {
public:
  ValidationError(std::string field, const std::string &what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

// Structured-document syntax error with the 1-based position of the fault.
class ParseError : public Error {
public:
  ParseError(const std::string &what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

// Numerical setup that cannot produce a meaningful answer (grid too coarse,
// resonance on top of the cutoff, ...).
class ConfigurationError : public Error {
public:
  using Error::Error;
};

// Pole on the real integration path of a lossless medium.
class SingularityError : public Error {
public:
  using Error::Error;
};

// Quadrature or fixed-point iteration failed to reach its tolerance.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string &what, std::vector<double> history = {})
      : Error(what), history_(std::move(history)) {}
  // Iterate history or per-stage error estimates, depending on the raiser.
  const std::vector<double> &history() const noexcept { return history_; }

private:
  std::vector<double> history_;
};

// Time march left the physical region (|C| > 1 beyond tolerance).
class InstabilityError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// 0 success, 1 validation, 2 convergence, 3 I/O.
int exit_code(const std::exception &e) noexcept;

} // namespace relemit
