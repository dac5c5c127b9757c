#include "gpmpc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>

#include "gpmpc/error.hpp"
#include "gpmpc/nelder_mead.hpp"

namespace gpmpc::gp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2π)

Matrix toeplitz_gram(double t0, double spacing, std::size_t n, const Hyperparams& hp) {
  Vector column(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    column(static_cast<Eigen::Index>(k)) = kernel_combined(t0 + spacing * k, t0, hp);
  }
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = column(i - j);
  }
  return k;
}

// Runs `attempt(jitter)` with the escalating jitter schedule. `attempt`
// returns nullopt when the factorization fails.
template <typename Fn>
auto with_jitter(double jitter, const Hyperparams& hp, const JitterPolicy& policy, Fn attempt)
    -> std::remove_cvref_t<decltype(*attempt(0.0))> {
  double j = jitter < 0.0 ? policy.initial * hp.theta_sq : jitter;
  const double ceiling = policy.max * hp.theta_sq;
  while (true) {
    if (auto r = attempt(j)) return *r;
    if (j <= 0.0 || j * policy.growth > ceiling * (1.0 + 1e-12)) break;
    j *= policy.growth;
  }
  throw GpFailure("Gram matrix is not positive definite after jitter escalation (last jitter " +
                  std::to_string(j) + ")");
}

void require_training_set(std::span<const double> times, std::span<const double> values,
                          std::size_t min_points) {
  if (times.size() != values.size()) {
    throw DimensionError("gp: times and values differ in length");
  }
  if (times.size() < min_points) {
    throw ParameterError("gp: need at least " + std::to_string(min_points) + " points, got " +
                         std::to_string(times.size()));
  }
}

}  // namespace

void Hyperparams::validate() const {
  if (!(theta_sq > 0.0 && l_se > 0.0 && l_p > 0.0 && lambda > 0.0)) {
    throw ParameterError("gp hyperparameters must be strictly positive");
  }
}

double kernel_se(double t, double t2, double l_se) {
  const double d = t - t2;
  return std::exp(-(d * d) / (2.0 * l_se * l_se));
}

double kernel_periodic(double t, double t2, double l_p, double lambda) {
  const double s = std::sin(std::numbers::pi * (t - t2) / lambda);
  return std::exp(-2.0 * s * s / (l_p * l_p));
}

double kernel_combined(double t, double t2, const Hyperparams& hp) {
  return hp.theta_sq * kernel_se(t, t2, hp.l_se) * kernel_periodic(t, t2, hp.l_p, hp.lambda);
}

bool uniformly_spaced(std::span<const double> times) {
  if (times.size() < 2) return true;
  const double h = times[1] - times[0];
  if (!(h > 0.0)) return false;
  for (std::size_t i = 2; i < times.size(); ++i) {
    if (std::abs((times[i] - times[i - 1]) - h) > 1e-9 * h) return false;
  }
  return true;
}

Matrix gram_matrix(std::span<const double> times, const Hyperparams& hp) {
  const std::size_t n = times.size();
  if (n >= 2 && uniformly_spaced(times)) {
    return toeplitz_gram(times[0], times[1] - times[0], n, hp);
  }
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = kernel_combined(times[i], times[j], hp);
    }
  }
  return k;
}

double log_marginal_likelihood(std::span<const double> times, std::span<const double> values,
                               const Hyperparams& hp, double jitter,
                               const JitterPolicy& policy) {
  require_training_set(times, values, 1);
  hp.validate();
  const Matrix k = gram_matrix(times, hp);
  const auto n = static_cast<Eigen::Index>(values.size());
  const Vector y = Eigen::Map<const Vector>(values.data(), n);

  return with_jitter(jitter, hp, policy, [&](double j) -> std::optional<double> {
    Matrix kj = k;
    kj.diagonal().array() += j;
    try {
      const numerics::CholeskyFactor f = numerics::cholesky(kj);
      const Vector z = f.solve_lower(y);
      return -0.5 * z.squaredNorm() - 0.5 * f.log_det - 0.5 * static_cast<double>(n) * kLog2Pi;
    } catch (const FactorizationError&) {
      return std::nullopt;
    }
  });
}

double log_marginal_likelihood_toeplitz(double spacing, std::span<const double> values,
                                        const Hyperparams& hp, double jitter,
                                        const JitterPolicy& policy) {
  if (values.empty()) throw ParameterError("gp: empty training set");
  hp.validate();
  const std::size_t n = values.size();
  std::vector<double> r(n);
  for (std::size_t k = 0; k < n; ++k) r[k] = kernel_combined(spacing * k, 0.0, hp);

  std::vector<double> a;
  std::vector<double> next;
  a.reserve(n);
  next.reserve(n);

  return with_jitter(jitter, hp, policy, [&](double j) -> std::optional<double> {
    double v = r[0] + j;
    if (!(v > 0.0)) return std::nullopt;
    double log_det = std::log(v);
    double quad = values[0] * values[0] / v;
    a.clear();
    for (std::size_t k = 1; k < n; ++k) {
      // Reflection coefficient for order k.
      double acc = r[k];
      for (std::size_t i = 0; i + 1 < k; ++i) acc -= a[i] * r[k - 1 - i];
      const double kappa = acc / v;
      next.assign(k, 0.0);
      for (std::size_t i = 0; i + 1 < k; ++i) next[i] = a[i] - kappa * a[k - 2 - i];
      next[k - 1] = kappa;
      a.swap(next);
      v *= (1.0 - kappa) * (1.0 + kappa);
      if (!(v > 0.0) || !std::isfinite(v)) return std::nullopt;

      double e = values[k];
      for (std::size_t i = 0; i < k; ++i) e -= a[i] * values[k - 1 - i];
      log_det += std::log(v);
      quad += e * e / v;
    }
    return -0.5 * quad - 0.5 * log_det - 0.5 * static_cast<double>(n) * kLog2Pi;
  });
}

FitResult fit_hyperparams(std::span<const double> times, std::span<const double> values,
                          const Hyperparams& init, const FitOptions& opts) {
  require_training_set(times, values, 10);
  init.validate();

  const bool uniform = uniformly_spaced(times);
  const double spacing = times[1] - times[0];
  auto likelihood = [&](const Hyperparams& hp) {
    return uniform ? log_marginal_likelihood_toeplitz(spacing, values, hp, -1.0, opts.jitter)
                   : log_marginal_likelihood(times, values, hp, -1.0, opts.jitter);
  };

  const double lo_theta = std::log(opts.theta_sq_min);
  const double hi_theta = std::log(opts.theta_sq_max);
  const double lo_lp = std::log(opts.l_p_min);
  const double hi_lp = std::log(opts.l_p_max);
  auto unpack = [&](const std::vector<double>& z) {
    Hyperparams hp = init;
    hp.theta_sq = std::exp(std::clamp(z[0], lo_theta, hi_theta));
    hp.l_p = std::exp(std::clamp(z[1], lo_lp, hi_lp));
    return hp;
  };

  FitResult result;
  result.hp = init;
  try {
    result.initial_log_likelihood = likelihood(init);
  } catch (const GpFailure&) {
    result.initial_log_likelihood = -std::numeric_limits<double>::infinity();
  }
  result.log_likelihood = result.initial_log_likelihood;

  auto objective = [&](const std::vector<double>& z) {
    ++result.evaluations;
    try {
      return -likelihood(unpack(z));
    } catch (const GpFailure&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  optim::NelderMeadOptions nm;
  nm.max_evaluations = opts.max_evaluations_per_restart;
  bool improved = false;
  for (const double scale : {1.0, 10.0, 0.1}) {
    const std::vector<double> z0 = {std::log(init.theta_sq * scale), std::log(init.l_p * scale)};
    const optim::NelderMeadResult r = optim::nelder_mead(objective, z0, nm);
    const double ll = -r.value;
    if (std::isfinite(ll) && ll > result.log_likelihood) {
      result.log_likelihood = ll;
      result.hp = unpack(r.x);
      improved = true;
    }
  }
  result.warning = !improved;
  return result;
}

GpModel GpModel::train(std::vector<double> times, std::vector<double> values,
                       const Hyperparams& hp, const JitterPolicy& policy) {
  require_training_set(times, values, 2);
  hp.validate();
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw ParameterError("gp: training times must be strictly increasing");
    }
  }

  const Matrix k = gram_matrix(times, hp);
  const auto n = static_cast<Eigen::Index>(values.size());
  const Vector y = Eigen::Map<const Vector>(values.data(), n);

  GpModel m;
  with_jitter(-1.0, hp, policy, [&](double j) -> std::optional<bool> {
    Matrix kj = k;
    kj.diagonal().array() += j;
    try {
      m.chol_ = std::make_shared<const numerics::CholeskyFactor>(numerics::cholesky(kj));
      m.jitter_ = j;
      return true;
    } catch (const FactorizationError&) {
      return std::nullopt;
    }
  });
  m.alpha_ = m.chol_->solve(y);
  m.active_ = true;
  m.hp_ = hp;
  m.policy_ = policy;
  m.times_ = std::move(times);
  m.values_ = std::move(values);
  return m;
}

GpModel GpModel::with_data(std::vector<double> times, std::vector<double> values) const {
  const bool reusable = active_ && times.size() == times_.size() && times.size() >= 2 &&
                        values.size() == times.size() && uniformly_spaced(times) &&
                        uniformly_spaced(times_) &&
                        std::abs((times[1] - times[0]) - (times_[1] - times_[0])) <=
                            1e-9 * std::abs(times_[1] - times_[0]) &&
                        times[1] > times[0];
  if (!reusable) return train(std::move(times), std::move(values), hp_, policy_);

  GpModel m = *this;
  const Vector y = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  m.alpha_ = m.chol_->solve(y);
  m.times_ = std::move(times);
  m.values_ = std::move(values);
  return m;
}

Prediction GpModel::predict(std::span<const double> query_times) const {
  Prediction p;
  p.means.assign(query_times.size(), 0.0);
  p.variances.assign(query_times.size(), hp_.theta_sq);
  if (!active_) return p;

  const auto n = static_cast<Eigen::Index>(times_.size());
  const auto q = static_cast<Eigen::Index>(query_times.size());
  Matrix k_star(n, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      k_star(i, j) = kernel_combined(times_[static_cast<std::size_t>(i)],
                                     query_times[static_cast<std::size_t>(j)], hp_);
    }
  }
  const Vector means = k_star.transpose() * alpha_;
  const Matrix v = chol_->solve_lower(k_star);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double t = query_times[static_cast<std::size_t>(j)];
    const double var = kernel_combined(t, t, hp_) - v.col(j).squaredNorm();
    p.means[static_cast<std::size_t>(j)] = means(j);
    p.variances[static_cast<std::size_t>(j)] = std::max(var, 0.0);
  }
  return p;
}

}  // namespace gpmpc::gp
