#pragma once

#include <Eigen/Dense>
#include <utility>

namespace gpmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numerics {

/// Lower Cholesky factor together with log|m|.
struct CholeskyFactor {
  Matrix lower;
  double log_det = 0.0;

  /// Solves (L Lᵀ) x = rhs.
  Matrix solve(const Matrix& rhs) const;
  /// Solves L x = rhs (forward substitution only).
  Matrix solve_lower(const Matrix& rhs) const;
};

/// e^m by scaling and squaring with a degree-13 Padé approximant. The input is
/// scaled so that ‖m‖∞ ≤ 0.5 before the approximant is applied.
Matrix matrix_exponential(const Matrix& m);

struct Discretized {
  Matrix a_d;
  Matrix inputs_d;
};

/// Zero-order-hold discretization of ẋ = a x + inputs u over `ts`. All input
/// columns are discretized jointly from exp([[a, inputs], [0, 0]]·ts).
Discretized zoh_discretize(const Matrix& a, const Matrix& inputs, double ts);

/// Throws FactorizationError if `m` is not numerically positive definite.
/// Jitter is deliberately left to the caller.
CholeskyFactor cholesky(const Matrix& m);

/// LU with partial pivoting. Throws SingularityError when the pivot ratio
/// drops below working precision.
Matrix solve_linear(const Matrix& a, const Matrix& rhs);

bool all_finite(const Matrix& m);

}  // namespace numerics
}  // namespace gpmpc
