#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar or configuration parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization hit a non-positive pivot.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

/// The model or controller was assembled inconsistently (e.g. a zero divisor
/// in the residual computation, a singular steady-state system).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class SimulationDiverged : public Error {
 public:
  SimulationDiverged(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class EstimatorFailure : public Error {
 public:
  using Error::Error;
};

class GpFailure : public Error {
 public:
  using Error::Error;
};

/// The QP solver exceeded its iteration budget. `dump()` holds a textual
/// rendering of the offending problem for post-mortem analysis.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, std::string dump)
      : Error(what), dump_(std::move(dump)) {}
  const std::string& dump() const noexcept { return dump_; }

 private:
  std::string dump_;
};

}  // namespace gpmpc
