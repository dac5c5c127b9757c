#pragma once

// Reference implementations used only by the tests. They favour directness
// over speed: explicit inverses, brute-force grids, textbook recursions.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_spd(int n, std::mt19937_64& rng, double shift = 1.0) {
  std::normal_distribution<double> nd;
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = nd(rng);
  return g.transpose() * g + shift * Matrix::Identity(n, n);
}

/// ∫₀^ts e^{aτ} dτ · b by composite Simpson on the matrix exponential series.
inline Matrix zoh_input_quadrature(const Matrix& a, const Matrix& b, double ts, int panels = 2000) {
  auto expm_series = [](const Matrix& m) {
    // Taylor with squaring; enough for the moderate norms used in tests.
    int s = 0;
    double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.1) {
      norm /= 2.0;
      ++s;
    }
    const Matrix x = m / std::pow(2.0, s);
    Matrix term = Matrix::Identity(m.rows(), m.cols());
    Matrix sum = term;
    for (int k = 1; k < 30; ++k) {
      term = term * x / static_cast<double>(k);
      sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
  };
  const double h = ts / panels;
  Matrix acc = Matrix::Zero(a.rows(), b.cols());
  for (int i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * expm_series(a * (h * i)) * b;
  }
  return acc * h / 3.0;
}

/// Gaussian log likelihood −½yᵀK⁻¹y − ½log det K − n/2 log 2π with an
/// explicit inverse and LU determinant.
inline double dense_log_likelihood(const Matrix& k, const Vector& y) {
  const Matrix inv = k.inverse();
  const double det = k.determinant();
  return -0.5 * y.dot(inv * y) - 0.5 * std::log(det) -
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

struct KfState {
  Vector mean;
  Matrix cov;
};

/// Textbook linear Kalman filter steps for x⁺ = A x + B u + g, y = c + C x.
inline KfState kf_predict(const KfState& s, const Matrix& a, const Vector& drive, const Matrix& q) {
  return {a * s.mean + drive, a * s.cov * a.transpose() + q};
}

inline KfState kf_update(const KfState& s, const Matrix& c, double offset, double y, double r) {
  const double innov_var = (c * s.cov * c.transpose())(0, 0) + r;
  const Vector gain = s.cov * c.transpose() / innov_var;
  const double innov = y - offset - (c * s.mean)(0, 0);
  return {s.mean + gain * innov, s.cov - gain * innov_var * gain.transpose()};
}

/// Exhaustive grid minimizer of ½uᵀHu + fᵀu over a box (n ≤ 2), with an
/// optional equality aᵀu = b handled by eliminating the last coordinate.
inline Vector grid_search_qp(const Matrix& h, const Vector& f, const Vector& lo, const Vector& hi,
                             double step) {
  const auto n = f.size();
  auto cost = [&](const Vector& u) { return 0.5 * u.dot(h * u) + f.dot(u); };
  Vector best = lo;
  double best_val = std::numeric_limits<double>::infinity();
  if (n == 1) {
    for (double x = lo(0); x <= hi(0) + 1e-12; x += step) {
      Vector u(1);
      u << std::min(x, hi(0));
      if (const double c = cost(u); c < best_val) {
        best_val = c;
        best = u;
      }
    }
    return best;
  }
  for (double x = lo(0); x <= hi(0) + 1e-12; x += step) {
    for (double y = lo(1); y <= hi(1) + 1e-12; y += step) {
      Vector u(2);
      u << std::min(x, hi(0)), std::min(y, hi(1));
      if (const double c = cost(u); c < best_val) {
        best_val = c;
        best = u;
      }
    }
  }
  return best;
}

/// Lag (in samples) maximizing the overlap-averaged Σ a[i+lag]·b[i] over
/// |lag| ≤ max_lag, both series mean-removed. Not wrapped.
inline int peak_lag(std::vector<double> a, std::vector<double> b, int max_lag) {
  auto center = [](std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v) x -= m;
  };
  center(a);
  center(b);
  const int n = static_cast<int>(a.size());
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
      const int j = i + lag;
      if (j < 0 || j >= n) continue;
      acc += a[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(i)];
      ++count;
    }
    acc /= count;
    if (acc > best_val) {
      best_val = acc;
      best = lag;
    }
  }
  return best;
}

/// Same, with indices wrapped modulo the length. Unbiased for signals
/// sampled over whole periods.
inline int circular_peak_lag(std::vector<double> a, std::vector<double> b, int max_lag) {
  auto center = [](std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v) x -= m;
  };
  center(a);
  center(b);
  const int n = static_cast<int>(a.size());
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += a[static_cast<std::size_t>(((i + lag) % n + n) % n)] * b[static_cast<std::size_t>(i)];
    }
    if (acc > best_val) {
      best_val = acc;
      best = lag;
    }
  }
  return best;
}

}  // namespace oracle
