#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gpmpc/error.hpp"
#include "gpmpc/gp.hpp"
#include "oracles.hpp"

using namespace gpmpc;
using gp::Hyperparams;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> grid(int n, double spacing, double start = 0.0) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = start + spacing * i;
  return t;
}

Matrix jittered_gram(const std::vector<double>& t, const Hyperparams& hp, double jitter) {
  const auto n = static_cast<int>(t.size());
  Matrix k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      k(i, j) = hp.theta_sq * std::exp(-0.5 * std::pow(t[i] - t[j], 2) / (hp.l_se * hp.l_se)) *
                std::exp(-2.0 * std::pow(std::sin(kPi * (t[i] - t[j]) / hp.lambda), 2) /
                         (hp.l_p * hp.l_p));
  k.diagonal().array() += jitter;
  return k;
}

// Draws one sample path of the periodic kernel on `t`.
std::vector<double> sample_path(const std::vector<double>& t, const Hyperparams& hp,
                                std::mt19937_64& rng) {
  // Same relative jitter as the fitted model, so the generator is in-model.
  const Matrix k = jittered_gram(t, hp, 1e-6 * hp.theta_sq);
  const Eigen::LLT<Matrix> llt(k);
  std::normal_distribution<double> nd;
  Vector z(static_cast<Eigen::Index>(t.size()));
  for (auto i = 0; i < z.size(); ++i) z(i) = nd(rng);
  const Vector y = llt.matrixL() * z;
  return {y.data(), y.data() + y.size()};
}

}  // namespace

TEST(Kernel, ReferenceValues) {
  EXPECT_DOUBLE_EQ(gp::kernel_se(0.0, 0.0, 10.0), 1.0);
  EXPECT_NEAR(gp::kernel_se(0.0, 10.0, 10.0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(gp::kernel_periodic(0.0, 360.0, 1.0, 1440.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(gp::kernel_periodic(0.0, 720.0, 1.0, 1440.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(gp::kernel_periodic(0.0, 1440.0, 0.3, 1440.0), 1.0, 1e-12);
  const Hyperparams hp{4.0, 1e9, 1.0, 1440.0};
  EXPECT_NEAR(gp::kernel_combined(100.0, 820.0, hp), 4.0 * std::exp(-2.0), 1e-12);
}

TEST(Kernel, LongDecayIsPurelyPeriodic) {
  const Hyperparams hp{1.0, 1e9, 0.8, 1440.0};
  for (double d : {0.0, 1440.0, 2880.0, 10080.0}) {
    EXPECT_NEAR(gp::kernel_combined(0.0, d, hp), 1.0, 1e-9);
  }
}

TEST(Kernel, SymmetricAndStationary) {
  const Hyperparams hp{2.0, 900.0, 0.6, 1440.0};
  EXPECT_DOUBLE_EQ(gp::kernel_combined(13.0, 451.0, hp), gp::kernel_combined(451.0, 13.0, hp));
  EXPECT_NEAR(gp::kernel_combined(13.0, 451.0, hp), gp::kernel_combined(113.0, 551.0, hp), 1e-14);
}

TEST(Gram, PositiveSemiDefinite) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> td(0.0, 5000.0);
  std::vector<double> t(80);
  for (double& v : t) v = td(rng);
  const Hyperparams hp{3.0, 2000.0, 0.5, 1440.0};
  const Matrix k = gp::gram_matrix(t, hp);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-9 * 3.0 * 80);
  EXPECT_LT((k - jittered_gram(t, hp, 0.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LogLikelihood, SinglePointClosedForm) {
  const std::vector<double> t{0.0};
  const std::vector<double> y{1.5};
  const Hyperparams hp{2.0, 1e9, 1.0, 1440.0};
  const double jitter = 1e-6;
  const double s = 2.0 + jitter;
  const double expected = -0.5 * y[0] * y[0] / s - 0.5 * std::log(s) - 0.5 * std::log(2.0 * kPi);
  EXPECT_NEAR(gp::log_marginal_likelihood(t, y, hp, jitter), expected, 1e-12);
}

TEST(LogLikelihood, MatchesDenseOracle) {
  const std::vector<double> t{0.0, 300.0, 900.0};
  const std::vector<double> y{0.4, -0.2, 1.1};
  const Hyperparams hp{1.7, 5000.0, 0.9, 1440.0};
  const double jitter = 1e-4;
  const double oracle_val =
      oracle::dense_log_likelihood(jittered_gram(t, hp, jitter), Vector::Map(y.data(), 3));
  EXPECT_NEAR(gp::log_marginal_likelihood(t, y, hp, jitter), oracle_val, 1e-8);
}

TEST(LogLikelihood, ToeplitzPathMatchesDense) {
  std::mt19937_64 rng(12);
  const auto t = grid(200, 5.0);
  const Hyperparams hp{2.5, 1e9, 0.7, 1440.0};
  const auto y = sample_path(t, hp, rng);
  for (double jitter : {1e-6 * 2.5, 1e-3}) {
    const double dense = gp::log_marginal_likelihood(t, y, hp, jitter);
    const double toeplitz = gp::log_marginal_likelihood_toeplitz(5.0, y, hp, jitter);
    EXPECT_NEAR(toeplitz, dense, 1e-6 * std::abs(dense));
  }
}

TEST(LogLikelihood, DuplicateInputsWithoutJitterFail) {
  const std::vector<double> t{0.0, 0.0, 5.0};
  const std::vector<double> y{1.0, 1.0, 0.0};
  const Hyperparams hp;
  gp::JitterPolicy none{0.0, 10.0, 0.0};
  EXPECT_THROW(gp::log_marginal_likelihood(t, y, hp, 0.0, none), GpFailure);
  // With the default schedule the same data is accepted.
  EXPECT_TRUE(std::isfinite(gp::log_marginal_likelihood(t, y, hp)));
}

TEST(Hyperparams, Validation) {
  EXPECT_NO_THROW(Hyperparams{}.validate());
  EXPECT_THROW((Hyperparams{0.0, 1e9, 1.0, 1440.0}.validate()), ParameterError);
  EXPECT_THROW((Hyperparams{1.0, -1.0, 1.0, 1440.0}.validate()), ParameterError);
  EXPECT_THROW((Hyperparams{1.0, 1e9, 0.0, 1440.0}.validate()), ParameterError);
  EXPECT_THROW((Hyperparams{1.0, 1e9, 1.0, 0.0}.validate()), ParameterError);
}

TEST(Fit, RecoversGeneratingHyperparameters) {
  // Averaged over independent draws to keep the test robust to one unlucky path.
  const Hyperparams truth{4.0, 1e9, 0.7, 1440.0};
  const auto t = grid(200, 50.0);
  double log_theta = 0.0;
  double log_lp = 0.0;
  const int draws = 6;
  for (int d = 0; d < draws; ++d) {
    std::mt19937_64 rng(100 + d);
    const auto y = sample_path(t, truth, rng);
    const auto fit = gp::fit_hyperparams(t, y, Hyperparams{});
    log_theta += std::log(fit.hp.theta_sq);
    log_lp += std::log(fit.hp.l_p);
    EXPECT_GE(fit.log_likelihood, fit.initial_log_likelihood);
  }
  EXPECT_NEAR(std::exp(log_theta / draws), 4.0, 2.0);
  EXPECT_NEAR(std::exp(log_lp / draws), 0.7, 0.15);
}

TEST(Fit, ZeroDataDrivesVarianceToLowerBound) {
  const auto t = grid(50, 5.0);
  const std::vector<double> y(50, 0.0);
  const gp::FitOptions opts;
  const auto fit = gp::fit_hyperparams(t, y, Hyperparams{}, opts);
  EXPECT_LT(fit.hp.theta_sq, 1e3 * opts.theta_sq_min);
  EXPECT_GE(fit.hp.theta_sq, opts.theta_sq_min);
}

TEST(Fit, NeverWorseThanInitial) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd(0.0, 0.3);
  const auto t = grid(120, 5.0);
  std::vector<double> y(120);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(t[i] / 200.0) + nd(rng);
  const auto fit = gp::fit_hyperparams(t, y, Hyperparams{});
  EXPECT_GE(fit.log_likelihood, fit.initial_log_likelihood - 1e-9);
  EXPECT_GE(fit.hp.l_p, gp::FitOptions{}.l_p_min);
  EXPECT_LE(fit.hp.l_p, gp::FitOptions{}.l_p_max);
}

TEST(Fit, TooFewPointsRejected) {
  const auto t = grid(5, 5.0);
  const std::vector<double> y(5, 1.0);
  EXPECT_THROW(gp::fit_hyperparams(t, y, Hyperparams{}), Error);
}

TEST(Predict, InterpolatesTrainingData) {
  const auto t = grid(30, 5.0);
  std::vector<double> y(30);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::cos(t[i] / 40.0);
  const auto model = gp::GpModel::train(t, y, Hyperparams{1.0, 1e9, 0.2, 1440.0});
  const auto pred = model.predict(t);
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_NEAR(pred.means[i], y[i], 1e-3);
    EXPECT_LT(pred.variances[i], 1e-3);
  }
}

TEST(Predict, PeriodicExtrapolationOneDayAhead) {
  // Two harmonics of the day, observed over 2.5 days, predicted over the next 24 h.
  const Hyperparams hp{1.0, 1e9, 0.6, 1440.0};
  auto f = [](double t) {
    return 0.3 * std::sin(2.0 * kPi * t / 1440.0) + 0.1 * std::cos(4.0 * kPi * t / 1440.0 + 0.4);
  };
  const auto t = grid(720, 5.0);
  std::vector<double> y(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) y[i] = f(t[i]);
  const auto model = gp::GpModel::train(t, y, hp);
  const auto q = grid(288, 5.0, t.back() + 5.0);
  const auto pred = model.predict(q);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) worst = std::max(worst, std::abs(pred.means[i] - f(q[i])));
  EXPECT_LT(worst, 0.02 * 0.8);  // 2 % of the peak-to-peak amplitude
}

TEST(Predict, RevertsToPriorFarFromData) {
  const Hyperparams hp{2.0, 100.0, 1.0, 1440.0};
  const auto t = grid(20, 5.0);
  const std::vector<double> y(20, 1.0);
  const auto model = gp::GpModel::train(t, y, hp);
  const std::vector<double> far{1e5};
  const auto pred = model.predict(far);
  EXPECT_NEAR(pred.means[0], 0.0, 1e-9);
  EXPECT_NEAR(pred.variances[0], 2.0, 1e-9);
}

TEST(Predict, InactiveModelIsPrior) {
  const gp::GpModel model;
  EXPECT_FALSE(model.active());
  const std::vector<double> q{0.0, 100.0};
  const auto pred = model.predict(q);
  EXPECT_EQ(pred.means, std::vector<double>(2, 0.0));
}

TEST(Predict, ShiftByOnePeriodIsInvariant) {
  const Hyperparams hp{1.0, 1e9, 0.8, 1440.0};
  const auto t = grid(40, 5.0);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(t[i] / 30.0);
  const auto model = gp::GpModel::train(t, y, hp);
  const std::vector<double> q{17.0, 300.0, 1000.0};
  const std::vector<double> q_shift{17.0 + 1440.0, 300.0 + 1440.0, 1000.0 + 1440.0};
  const auto a = model.predict(q);
  const auto b = model.predict(q_shift);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_NEAR(a.means[i], b.means[i], 1e-9);
    EXPECT_NEAR(a.variances[i], b.variances[i], 1e-9);
  }
}

TEST(Predict, VarianceNeverNegative) {
  const Hyperparams hp{1.0, 1e9, 0.3, 1440.0};
  const auto t = grid(200, 5.0);
  std::vector<double> y(200, 0.5);
  const auto model = gp::GpModel::train(t, y, hp);
  const auto q = grid(500, 3.7);
  for (double v : model.predict(q).variances) EXPECT_GE(v, 0.0);
}

TEST(GpModel, WithDataMatchesFreshTraining) {
  const Hyperparams hp{1.3, 1e9, 0.9, 1440.0};
  const auto t1 = grid(100, 5.0);
  const auto t2 = grid(100, 5.0, 5.0);
  std::vector<double> y1(100), y2(100);
  for (std::size_t i = 0; i < 100; ++i) {
    y1[i] = std::sin(t1[i] / 70.0);
    y2[i] = std::cos(t2[i] / 90.0);
  }
  const auto base = gp::GpModel::train(t1, y1, hp);
  const auto reused = base.with_data(t2, y2);
  const auto fresh = gp::GpModel::train(t2, y2, hp);
  const std::vector<double> q{0.0, 250.0, 510.0, 800.0};
  const auto a = reused.predict(q);
  const auto b = fresh.predict(q);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_NEAR(a.means[i], b.means[i], 1e-9);
    EXPECT_NEAR(a.variances[i], b.variances[i], 1e-9);
  }
  // Different size forces a new factorization but must still agree.
  const auto grown = base.with_data(grid(101, 5.0), std::vector<double>(101, 0.2));
  EXPECT_EQ(grown.factor().lower.rows(), 101);
}

TEST(UniformSpacing, Detection) {
  EXPECT_TRUE(gp::uniformly_spaced(grid(10, 5.0)));
  EXPECT_FALSE(gp::uniformly_spaced(std::vector<double>{0.0, 5.0, 11.0}));
}
