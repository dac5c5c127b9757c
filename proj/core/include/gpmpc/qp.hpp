#pragma once

#include <optional>
#include <string>

#include "gpmpc/numerics.hpp"

namespace gpmpc::qp {

struct LinearEquality {
  Vector a;
  double b = 0.0;
};

/// minimize ½ uᵀ H u + fᵀ u + constant
/// subject to lower ≤ u ≤ upper and, optionally, aᵀu = b.
struct QpProblem {
  Matrix hessian;
  Vector gradient;
  Vector lower;
  Vector upper;
  std::optional<LinearEquality> equality;
  double constant = 0.0;

  int size() const { return static_cast<int>(gradient.size()); }
  double objective(const Vector& u) const;
  /// Throws DimensionError / ParameterError on malformed data.
  void validate() const;
  /// Plain-text dump with full precision, for failure reports.
  std::string dump() const;
};

enum class QpStatus { kOptimal, kTerminalSoftened };

const char* to_string(QpStatus s);

struct QpSolution {
  Vector u;
  QpStatus status = QpStatus::kOptimal;
  double objective = 0.0;
  /// Max of scaled stationarity, primal infeasibility, and dual-sign violation.
  double kkt_residual = 0.0;
  int iterations = 0;
  int active_bounds = 0;
  bool terminal_softened() const { return status == QpStatus::kTerminalSoftened; }
};

struct SolverOptions {
  int max_iterations = 200;
  double feasibility_tolerance = 1e-10;
  /// Penalty weight w for the fallback w·(aᵀu − b)² when the equality is
  /// infeasible under the bounds.
  double soft_weight = 1e6;
};

/// Replaces the equality of `qp` by a quadratic penalty of weight `weight`.
QpProblem soften_equality(const QpProblem& qp, double weight);

/// Dual active-set (Goldfarb–Idnani) solve. If the equality cannot be met
/// within the bounds the problem is re-solved with the equality softened.
/// Throws SolverFailure (carrying a dump) when the iteration cap is hit.
QpSolution solve_qp(const QpProblem& qp, const SolverOptions& opts = {});

/// KKT residual of a candidate solution; multipliers are recovered by least
/// squares on the constraints active at `u`.
double kkt_residual(const QpProblem& qp, const Vector& u, double active_tolerance = 1e-9);

}  // namespace gpmpc::qp
