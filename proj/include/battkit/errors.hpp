#pragma once

#include <stdexcept>
#include <string>

namespace battkit {

/// Base class for all battkit errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Grid construction rejected (e.g. fewer than two shells).
class InvalidGridError : public Error {
public:
  using Error::Error;
};

/// Argument outside its mathematical domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Linear-algebra breakdown (singular solve, non-converged eigensolver).
class NumericalFailure : public Error {
public:
  using Error::Error;
};

/// Time integration produced non-finite state; carries the offending step.
class IntegrationFailure : public Error {
public:
  IntegrationFailure(const std::string& msg, long step)
      : Error(msg + " (step " + std::to_string(step) + ")"), step_index(step) {}
  long step_index;
};

/// Malformed input file or table.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Invalid runtime input (non-finite sample, empty window, ...).
class InputError : public Error {
public:
  using Error::Error;
};

/// Model assembly dimension mismatch.
class AssemblyError : public Error {
public:
  using Error::Error;
};

/// Observer gain synthesis did not reach a feasible certificate.
class DesignFailure : public Error {
public:
  DesignFailure(const std::string& msg, double achieved_margin)
      : Error(msg), best_margin(achieved_margin) {}
  double best_margin;  ///< best max-eigenvalue reached before giving up
};

}  // namespace battkit
