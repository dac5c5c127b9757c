#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gpmpc/error.hpp"
#include "gpmpc/numerics.hpp"
#include "gpmpc/plant.hpp"

using namespace gpmpc;

namespace {

struct Fixture {
  model::ModelSet model = model::discretize_model();
  plant::PlantConfig cfg;
  model::IsProfile nominal = model::IsProfile::constant(1.0);
};

}  // namespace

TEST(PlantStep, EquilibriumHoldsExactly) {
  Fixture f;
  plant::PlantState s;
  for (std::size_t k = 0; k < 288; ++k) s = plant::plant_step(s, 0.0, {}, f.nominal, f.model, f.cfg, k);
  EXPECT_EQ(s.x.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(s.bg(), 110.0);
  EXPECT_DOUBLE_EQ(s.t, 288 * 5.0);
}

TEST(PlantStep, NominalSensitivityMatchesDiscreteModel) {
  Fixture f;
  plant::PlantState s;
  s.x << 20.0, 5.0, -3.0, 8.0, 4.0, 0.01, -0.02, 0.03, 10.0, 5.0, 100.0, 300.0;
  StateVector ref = s.x;
  for (std::size_t k = 0; k < 100; ++k) {
    const double u = 0.05 * std::sin(0.1 * static_cast<double>(k));
    s = plant::plant_step(s, u, {}, f.nominal, f.model, f.cfg, k);
    ref = f.model.step(ref, u);
  }
  EXPECT_LT((s.x - ref).cwiseAbs().maxCoeff(), 1e-6 * ref.cwiseAbs().maxCoeff());
}

TEST(PlantStep, LowSensitivityRaisesGlucoseToSteadyOffset) {
  Fixture f;
  const auto low = model::IsProfile::constant(0.55);
  plant::PlantState s;
  for (std::size_t k = 0; k < 288 * 4; ++k) s = plant::plant_step(s, 0.0, {}, low, f.model, f.cfg, k);

  // Â x = −b_kis·(k − 1)·(x₅ + I_MI,basal) with x₅ = 0 at fixed insulin input.
  const auto split = model::split_system();
  const Vector rhs = -split.b_kis * ((0.55 - 1.0) * f.cfg.i_mi_basal);
  const Vector x_ss = numerics::solve_linear(split.a_hat, rhs);
  EXPECT_GT(x_ss(kPlasmaGlucose), 0.0);
  EXPECT_GT(s.x(kPlasmaGlucose), 0.0);
  EXPECT_NEAR(s.x(kPlasmaGlucose), x_ss(kPlasmaGlucose), 1e-3 * std::abs(x_ss(kPlasmaGlucose)));
}

TEST(PlantStep, MealPeaksAtCalibratedHeightThenReturns) {
  Fixture f;
  const std::vector<plant::MealEvent> meals = {{0.0, 50.0, true}};
  plant::PlantState s;
  double peak = s.bg();
  for (std::size_t k = 0; k < 288 * 2; ++k) {
    s = plant::plant_step(s, 0.0, meals, f.nominal, f.model, f.cfg, k);
    peak = std::max(peak, s.bg());
  }
  EXPECT_NEAR(peak, 180.0, 15.0);
  EXPECT_NEAR(peak, 180.0, 0.01);  // default gain is the calibrated one
  EXPECT_LT(std::abs(s.bg() - 110.0), 1.0);
}

TEST(PlantStep, MealInjectedAtItsOwnInstant) {
  Fixture f;
  // A meal at the start of the interval equals a pre-step impulse.
  plant::PlantState s;
  const std::vector<plant::MealEvent> at_start = {{0.0, 10.0, true}};
  const auto a = plant::plant_step(s, 0.0, at_start, f.nominal, f.model, f.cfg);
  StateVector pre = StateVector::Zero();
  pre(kIntestineGlucose) = f.cfg.meal_gain * 10.0;
  const StateVector ref = f.model.step(pre, 0.0);
  EXPECT_LT((a.x - ref).cwiseAbs().maxCoeff(), 1e-6 * ref.cwiseAbs().maxCoeff());

  // A meal late in the interval has had less time to act.
  const std::vector<plant::MealEvent> late = {{4.0, 10.0, true}};
  const auto b = plant::plant_step(s, 0.0, late, f.nominal, f.model, f.cfg);
  EXPECT_GT(b.x(kIntestineGlucose), a.x(kIntestineGlucose));
  EXPECT_LT(b.x(kStomachGlucose), a.x(kStomachGlucose));

  // Meals outside [t, t + ts) are ignored.
  const std::vector<plant::MealEvent> outside = {{5.0, 10.0, true}, {-1.0, 10.0, true}};
  EXPECT_EQ(plant::plant_step(s, 0.0, outside, f.nominal, f.model, f.cfg).x.cwiseAbs().maxCoeff(),
            0.0);
}

TEST(PlantStep, GiChainMassBalance) {
  // Standalone stomach/intestine chain: ∫ x11 dt = injected / 0.017.
  Fixture f;
  f.cfg.meal_gain = 1.0;
  const std::vector<plant::MealEvent> meals = {{0.0, 100.0, true}};
  plant::PlantState s;
  double integral = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < 288 * 3; ++k) {
    s = plant::plant_step(s, 0.0, meals, f.nominal, f.model, f.cfg, k);
    integral += 0.5 * (prev + s.x(kStomachGlucose)) * 5.0;
    prev = s.x(kStomachGlucose);
  }
  EXPECT_NEAR(integral, 100.0 / 0.017, 0.01 * 100.0 / 0.017);
}

TEST(PlantStep, InputBoundsEnforced) {
  Fixture f;
  plant::PlantState s;
  EXPECT_THROW(plant::plant_step(s, -0.2, {}, f.nominal, f.model, f.cfg), ParameterError);
  EXPECT_THROW(plant::plant_step(s, 0.5, {}, f.nominal, f.model, f.cfg), ParameterError);
  EXPECT_NO_THROW(plant::plant_step(s, -0.169, {}, f.nominal, f.model, f.cfg));
  EXPECT_NO_THROW(plant::plant_step(s, 0.5 - 0.169, {}, f.nominal, f.model, f.cfg));
}

TEST(PlantStep, DivergenceReportsStep) {
  Fixture f;
  plant::PlantState s;
  s.x(kPlasmaGlucose) = 5000.0;
  try {
    plant::plant_step(s, 0.0, {}, f.nominal, f.model, f.cfg, 17);
    FAIL() << "expected SimulationDiverged";
  } catch (const SimulationDiverged& e) {
    EXPECT_EQ(e.step(), 17u);
  }
}

TEST(IsDisturbance, AffineInInsulin) {
  Fixture f;
  const auto p = model::IsProfile::constant(1.3);
  StateVector x = StateVector::Zero();
  x(kInterstitialInsulin) = 2.0;
  EXPECT_NEAR(plant::is_disturbance(0.0, x, p, f.cfg), 0.3 * (2.0 + f.cfg.i_mi_basal), 1e-12);
  EXPECT_EQ(plant::is_disturbance(0.0, x, f.nominal, f.cfg), 0.0);
}

TEST(Measurement, NoiseFreeAndNoisy) {
  plant::PlantState s;
  auto rng = plant::measurement_engine(1, 0);
  EXPECT_DOUBLE_EQ(plant::measure(s, 0.0, rng), 110.0);
  s.x(kPlasmaGlucose) = 35.3;
  EXPECT_DOUBLE_EQ(plant::measure(s, 0.0, rng), 145.3);

  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto r = plant::measurement_engine(99, static_cast<std::uint64_t>(i));
    sum += plant::measure(s, 2.0, r);
  }
  EXPECT_NEAR(sum / n, 145.3, 0.1);
}

TEST(Measurement, StreamsKeyedBySeedAndStep) {
  plant::PlantState s;
  auto a = plant::measurement_engine(5, 12);
  auto b = plant::measurement_engine(5, 12);
  auto c = plant::measurement_engine(5, 13);
  auto d = plant::measurement_engine(6, 12);
  const double va = plant::measure(s, 1.0, a);
  EXPECT_EQ(va, plant::measure(s, 1.0, b));
  EXPECT_NE(va, plant::measure(s, 1.0, c));
  EXPECT_NE(va, plant::measure(s, 1.0, d));
}

TEST(TruthDisturbance, DailyPeriodicInFastingLoopFreePlant) {
  // Open loop at basal insulin: the disturbance settles to a 1440-min cycle.
  Fixture f;
  const auto profile = model::IsProfile::circadian_default();
  plant::PlantState s;
  std::vector<double> d;
  for (std::size_t k = 0; k < 288 * 7; ++k) {
    if (k >= 288 * 3) d.push_back(plant::is_disturbance(s.t, s.x, profile, f.cfg));
    s = plant::plant_step(s, 0.0, {}, profile, f.model, f.cfg, k);
  }
  // Autocorrelation over lags 200..400 samples peaks at 288 ± 1.
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  int best = 0;
  double best_val = -1e300;
  for (int lag = 200; lag <= 400; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < d.size(); ++i) {
      acc += (d[i] - mean) * (d[i + static_cast<std::size_t>(lag)] - mean);
    }
    acc /= static_cast<double>(d.size() - static_cast<std::size_t>(lag));
    if (acc > best_val) {
      best_val = acc;
      best = lag;
    }
  }
  EXPECT_NEAR(best, 288, 1);
}
