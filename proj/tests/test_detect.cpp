#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tankfdi/detect.hpp"
#include "tankfdi/observer.hpp"

using namespace tankfdi;

namespace {

struct Rig {
  TankParams params;
  StateSpace ss = build_healthy(params);
  ObserverDesign design = place_observer_poles(ss, {-5.0, -8.0, -10.0});
  Vector e_hat = Vector::Constant(3, 3.75);
  ThresholdCurve threshold =
      build_threshold(design.Gamma_d, ss.C, e_hat, ThresholdKind::kModal, 1e-9);
  ThresholdCurve box = build_threshold(design.Gamma_d, ss.C, e_hat, ThresholdKind::kBox, 1e-9);
  PiecewiseConstantSignal u{{0.0, 1.0}, {2.0, 1.0}};

  DetectionReport run(const Vector& x0, double delta_bar, double horizon,
                      ResidualTrace* out = nullptr) const {
    return run(x0, delta_bar, horizon, threshold, out);
  }

  DetectionReport run(const Vector& x0, double delta_bar, double horizon,
                      const ThresholdCurve& thr, ResidualTrace* out = nullptr) const {
    const auto plant = simulate(params, u, {2.0, delta_bar}, x0, 1e-3, horizon);
    const auto obs = run_luenberger(ss, design.Psi, u, SampledOutput(plant.outputs, 1e-3),
                                    Vector::Constant(3, 0.25));
    const auto res = residual(plant, obs);
    if (out) *out = res;
    return detect(res, thr, 2.0);
  }
};

double mode_coefficient(const std::vector<Mode>& modes, double pole) {
  for (const auto& m : modes) {
    if (std::abs(m.pole - pole) < 1e-9) return m.coefficient;
  }
  ADD_FAILURE() << "no mode at " << pole;
  return 0.0;
}

}  // namespace

TEST(InitialErrorBound, Cases) {
  const Vector b = initial_error_bound(Vector::Constant(3, 0.25), Vector::Constant(3, 4.0),
                                       Vector::Constant(3, 0.25));
  EXPECT_LT((b - Vector::Constant(3, 3.75)).norm(), 1e-15);
  const Vector same = Vector::Constant(3, 1.0);
  EXPECT_EQ(initial_error_bound(same, same, same).norm(), 0.0);
  EXPECT_DOUBLE_EQ(initial_error_bound(Vector::Zero(1), Vector::Constant(1, 2.0),
                                       Vector::Constant(1, 0.5))(0),
                   1.5);
}

TEST(BuildThreshold, ReferenceCoefficients) {
  const Rig s;
  ASSERT_FALSE(s.threshold.sampled);
  EXPECT_NEAR(mode_coefficient(s.threshold.signed_modes, -5.0), 78.0 / 64, 1e-8);
  EXPECT_NEAR(mode_coefficient(s.threshold.signed_modes, -8.0), -765.0 / 64, 1e-8);
  EXPECT_NEAR(mode_coefficient(s.threshold.signed_modes, -10.0), 807.0 / 64, 1e-8);
  EXPECT_NEAR(mode_coefficient(s.threshold.modes, -8.0), 765.0 / 64, 1e-8);
  EXPECT_NEAR(s.threshold.signed_value(0.0), 1.875, 1e-12);
  EXPECT_NEAR(s.threshold(0.0), 1650.0 / 64, 1e-8);
}

TEST(BuildThreshold, SignedCurveMatchesMatrixExponential) {
  const Rig s;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> t(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double ti = t(rng);
    const double ref = (s.ss.C * oracle::expm(s.design.Gamma_d * ti) * s.e_hat)(0, 0);
    EXPECT_NEAR(s.threshold.signed_value(ti), ref, 1e-8);
    EXPECT_GE(s.threshold(ti), std::abs(ref) - 1e-12);
    // Worst case over initial errors in the box |e_i| <= e_hat_i.
    const Matrix row = s.ss.C * oracle::expm(s.design.Gamma_d * ti);
    const double worst = (row.cwiseAbs() * s.e_hat)(0, 0);
    EXPECT_GE(s.box(ti), worst - 1e-12);
    EXPECT_GE(s.box(ti), s.threshold(ti));
  }
}

TEST(BuildThreshold, ModalCurveDoesNotCoverTheWholeBox) {
  const Rig s;
  const Vector e0 = (Vector(3) << 3.75, 0.0, 3.75).finished();
  bool exceeded = false;
  for (double t = 0.0; t < 3.0 && !exceeded; t += 0.01) {
    const double r = std::abs((s.ss.C * oracle::expm(s.design.Gamma_d * t) * e0)(0, 0));
    exceeded = r > s.threshold(t);
    EXPECT_LE(r, s.box(t) + 1e-12);
  }
  EXPECT_TRUE(exceeded);
}

TEST(BuildThreshold, FloorAndValidation) {
  const Rig s;
  EXPECT_DOUBLE_EQ(s.threshold(50.0), 1e-9);
  EXPECT_THROW(build_threshold(s.design.Gamma_d, s.ss.C, s.e_hat, ThresholdKind::kModal, -1.0),
               InvalidParameter);
}

TEST(BuildThreshold, ZeroBoundIsZero) {
  const Rig s;
  const auto thr = build_threshold(s.design.Gamma_d, s.ss.C, Vector::Zero(3));
  for (double t : {0.0, 0.5, 3.0}) EXPECT_EQ(thr(t), 0.0);
}

TEST(BuildThreshold, RepeatedPolesFallBackToSampledEnvelope) {
  const Rig s;
  const auto d = place_observer_poles(s.ss, {-6.0, -6.0, -6.0});
  const auto thr = build_threshold(d.Gamma_d, s.ss.C, s.e_hat);
  EXPECT_TRUE(thr.sampled);
  for (double t : {0.0, 0.1234, 0.9, 2.5}) {
    const Matrix row = s.ss.C * oracle::expm(d.Gamma_d * t);
    EXPECT_NEAR(thr.signed_value(t), (row * s.e_hat)(0, 0), 1e-5);
    EXPECT_GE(thr(t), (row.cwiseAbs() * s.e_hat)(0, 0) - 1e-5);
  }
}

TEST(Residual, InitialValue) {
  const Rig s;
  ResidualTrace res;
  s.run(Vector::Constant(3, 4.0), 0.5, 0.5, &res);
  EXPECT_NEAR(res.residuals.front(), 1.875, 1e-12);
}

TEST(Residual, ZeroWhenObserverStartsExact) {
  const Rig s;
  const Vector x0 = Vector::Constant(3, 0.25);
  const auto plant = simulate(s.params, s.u, {}, x0, 1e-3, 4.0);
  const auto obs = run_luenberger(s.ss, s.design.Psi, s.u, SampledOutput(plant.outputs, 1e-3), x0);
  for (double e : residual(plant, obs).residuals) ASSERT_LT(std::abs(e), 1e-10);
}

TEST(Residual, GridMismatchThrows) {
  const Rig s;
  const auto a = simulate(s.params, s.u, {}, Vector::Ones(3), 1e-3, 1.0);
  const auto b = simulate(s.params, s.u, {}, Vector::Ones(3), 1e-3, 2.0);
  EXPECT_THROW(residual(a, b), InvalidParameter);
}

TEST(Detect, ReferenceScenarios) {
  const Rig s;
  const std::vector<Vector> x0s{Vector::Constant(3, 0.26), Vector::Constant(3, 4.0),
                                (Vector(3) << 2.4, 3.6, 1.8).finished()};
  const double ref[] = {2.0235, 2.015, 2.0165};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto r = s.run(x0s[i], 0.5, 4.0);
    ASSERT_TRUE(r.detected);
    EXPECT_GT(*r.t_d, 2.0);
    EXPECT_NEAR(*r.t_d, ref[i], 0.02);
    EXPECT_LE(*r.t_d_exact, *r.t_d_sample);
  }
}

TEST(Detect, PostFaultResidualOvertakesEnvelope) {
  const Rig s;
  ResidualTrace res;
  const auto r = s.run(Vector::Constant(3, 4.0), 0.5, 4.0, &res);
  ASSERT_TRUE(r.detected);
  const auto k = static_cast<std::size_t>(std::lround(3.0 / 1e-3));
  EXPECT_GT(std::abs(res.residuals[k]), s.threshold(res.times[k]));
}

TEST(Detect, NoFaultNoAlarm) {
  const Rig s;
  const auto r = s.run(Vector::Constant(3, 4.0), 0.0, 10.0);
  EXPECT_FALSE(r.detected);
  EXPECT_FALSE(r.t_d.has_value());
  EXPECT_GT(*std::min_element(r.margin_trace.begin(), r.margin_trace.end()), 0.0);
}

TEST(Detect, NoFalseAlarmFromRandomInitialStates) {
  const Rig s;
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> box(0.25, 4.0);
  for (int i = 0; i < 25; ++i) {
    const Vector x0 = (Vector(3) << box(rng), box(rng), box(rng)).finished();
    ASSERT_FALSE(s.run(x0, 0.0, 10.0, s.box).detected) << x0.transpose();
  }
}

TEST(Detect, BoxThresholdStillCatchesLeak) {
  const Rig s;
  const auto r = s.run(Vector::Constant(3, 4.0), 0.5, 4.0, s.box);
  ASSERT_TRUE(r.detected);
  EXPECT_GT(*r.t_d, 2.0);
}

TEST(Detect, CrossingInterpolation) {
  ThresholdCurve flat;
  flat.modes = {{1.0, 0.0}};
  flat.signed_modes = flat.modes;
  ResidualTrace res{{0.0, 0.1, 0.2, 0.3}, {0.0, 0.5, 1.5, 2.0}};
  const auto r = detect(res, flat);
  ASSERT_TRUE(r.detected);
  EXPECT_DOUBLE_EQ(*r.t_d_sample, 0.2);
  EXPECT_NEAR(*r.t_d_exact, 0.15, 1e-12);
  EXPECT_NEAR(*r.t_d, 0.15, 1e-12);
}
