#include "gpmpc/numerics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "gpmpc/error.hpp"

namespace gpmpc::numerics {

namespace {

constexpr double kSquaringThreshold = 0.5;
constexpr double kSymmetryTolerance = 1e-10;

// Degree-13 diagonal Padé coefficients (Higham 2005).
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix matrix_exponential(const Matrix& m) {
  require_square(m, "matrix_exponential");
  if (!m.allFinite()) throw ParameterError("matrix_exponential: non-finite entry");

  const Eigen::Index n = m.rows();
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > kSquaringThreshold) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / kSquaringThreshold)));
  }
  const Matrix a = m / std::ldexp(1.0, squarings);

  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const auto& b = kPade13;

  const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
                         b[5] * a4 + b[3] * a2 + b[1] * ident;
  const Matrix u = a * u_inner;
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                   b[4] * a4 + b[2] * a2 + b[0] * ident;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

Discretized zoh_discretize(const Matrix& a, const Matrix& inputs, double ts) {
  require_square(a, "zoh_discretize");
  if (inputs.rows() != a.rows()) {
    throw DimensionError("zoh_discretize: inputs has " + std::to_string(inputs.rows()) +
                         " rows, expected " + std::to_string(a.rows()));
  }
  if (!(ts > 0.0) || !std::isfinite(ts)) {
    throw ParameterError("zoh_discretize: sampling time must be positive");
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index m = inputs.cols();
  Matrix block = Matrix::Zero(n + m, n + m);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, m) = inputs;
  const Matrix e = matrix_exponential(block * ts);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

CholeskyFactor cholesky(const Matrix& m) {
  require_square(m, "cholesky");
  if (!m.allFinite()) throw FactorizationError("cholesky: non-finite entry");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw FactorizationError("cholesky: matrix is not symmetric");
  }

  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("cholesky: matrix is not positive definite");
  }
  CholeskyFactor f;
  f.lower = llt.matrixL();
  const auto diag = f.lower.diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite()) {
    throw FactorizationError("cholesky: non-positive pivot");
  }
  f.log_det = 2.0 * diag.array().log().sum();
  return f;
}

Matrix CholeskyFactor::solve_lower(const Matrix& rhs) const {
  return lower.triangularView<Eigen::Lower>().solve(rhs);
}

Matrix CholeskyFactor::solve(const Matrix& rhs) const {
  const Matrix y = solve_lower(rhs);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix solve_linear(const Matrix& a, const Matrix& rhs) {
  require_square(a, "solve_linear");
  if (rhs.rows() != a.rows()) {
    throw DimensionError("solve_linear: rhs has " + std::to_string(rhs.rows()) +
                         " rows, expected " + std::to_string(a.rows()));
  }
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > std::numeric_limits<double>::epsilon())) {
    throw SingularityError("solve_linear: matrix is singular to working precision (rcond=" +
                           std::to_string(rcond) + ")");
  }
  Matrix x = lu.solve(rhs);
  if (!x.allFinite()) throw SingularityError("solve_linear: non-finite solution");
  return x;
}

}  // namespace gpmpc::numerics
