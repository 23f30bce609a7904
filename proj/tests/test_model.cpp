#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tankfdi/model.hpp"

using namespace tankfdi;

namespace {

TankParams reference_params() { return {}; }

Vector vec3(double a, double b, double c) { return (Vector(3) << a, b, c).finished(); }

}  // namespace

TEST(BuildHealthy, ReferenceMatrices) {
  const StateSpace ss = build_healthy(reference_params());
  Matrix A(3, 3);
  A << -0.5, 0, 0, 0.5, -1.5, 0, 0, 1.5, -0.5;
  EXPECT_EQ(ss.A, A);
  EXPECT_EQ(ss.C(0, 2), 0.5);
  EXPECT_EQ(ss.C(0, 0), 0.0);
  EXPECT_EQ(ss.B, vec3(1, 0, 0));
  EXPECT_EQ(ss.F, vec3(0, -1, 0));
}

TEST(BuildHealthy, UnitParameters) {
  TankParams p;
  p.psi = {1, 1, 1};
  p.delta = {1, 1, 1};
  Matrix A(3, 3);
  A << -1, 0, 0, 1, -1, 0, 0, 1, -1;
  EXPECT_EQ(build_healthy(p).A, A);
}

TEST(BuildHealthy, RejectsNonPositiveArea) {
  TankParams p;
  p.psi[1] = 0.0;
  EXPECT_THROW(build_healthy(p), InvalidParameter);
  p = {};
  p.delta[2] = -1.0;
  EXPECT_THROW(build_healthy(p), InvalidParameter);
}

TEST(BuildFaulty, LeakEntry) {
  TankParams p;
  p.delta_bar = 0.5;
  EXPECT_DOUBLE_EQ(build_faulty(p).A(1, 1), -2.0);
  p.psi = {1, 1, 1};
  p.delta = {1, 1, 1};
  p.delta_bar = 1.0;
  EXPECT_DOUBLE_EQ(build_faulty(p).A(1, 1), -2.0);
}

TEST(BuildFaulty, ZeroLeakMatchesHealthy) {
  const TankParams p;
  EXPECT_EQ(build_faulty(p).A, build_healthy(p).A);
}

TEST(BuildFaulty, RejectsNegativeLeak) {
  TankParams p;
  p.delta_bar = -0.1;
  EXPECT_THROW(build_faulty(p), InvalidParameter);
}

TEST(FaultFlow, Cases) {
  const TankParams p;
  EXPECT_EQ(fault_flow({2.0, 0.5}, p, 3.0, 1.9), 0.0);
  EXPECT_DOUBLE_EQ(fault_flow({2.0, 0.5}, p, 2.0, 2.5), 1.0);
  for (double t : {0.0, 2.0, 5.0}) EXPECT_EQ(fault_flow({2.0, 0.0}, p, 2.0, t), 0.0);
}

TEST(FaultActive, FirstSampleAtOrAfterOnset) {
  const FaultProfile f{2.0, 0.5};
  EXPECT_FALSE(fault_active(f, 1.999, 1e-3));
  EXPECT_TRUE(fault_active(f, 2.0, 1e-3));
  // Grid time 2000 * 1e-3 carries roundoff; it must still count as the onset.
  EXPECT_TRUE(fault_active(f, 1999 * 1e-3 + 1e-3, 1e-3));
}

TEST(PiecewiseSignal, Segments) {
  const PiecewiseConstantSignal u({0.0, 1.0}, {2.0, 1.0});
  EXPECT_EQ(u(-1.0), 2.0);
  EXPECT_EQ(u(0.5), 2.0);
  EXPECT_EQ(u(1.0), 1.0);
  EXPECT_EQ(u(100.0), 1.0);
  EXPECT_THROW(PiecewiseConstantSignal({1.0, 0.5}, {1.0, 2.0}), InvalidParameter);
  EXPECT_THROW(PiecewiseConstantSignal({0.0}, {1.0, 2.0}), InvalidParameter);
}

TEST(SteadyState, LinearSolves) {
  const TankParams p;
  const Vector xs = steady_state(build_healthy(p), 1.0);
  const Matrix A = build_healthy(p).A;
  const Vector oracle = A.fullPivLu().solve(-Vector::Unit(3, 0));
  EXPECT_LT((xs - oracle).norm(), 1e-14);
  EXPECT_LT((xs - vec3(2, 2.0 / 3.0, 2)).norm(), 1e-14);
  EXPECT_EQ(steady_state(build_healthy(p), 0.0).norm(), 0.0);
  TankParams f = p;
  f.delta_bar = 0.5;
  EXPECT_LT((steady_state(build_faulty(f), 1.0) - vec3(2, 0.5, 1.5)).norm(), 1e-14);
}

TEST(SteadyState, SingularMatrixThrows) {
  StateSpace ss = build_healthy({});
  ss.A.setZero();
  EXPECT_THROW(steady_state(ss, 1.0), SingularMatrix);
}

TEST(Simulate, SteadyStateIsFixedPoint) {
  const TankParams p;
  const Vector xs = vec3(2, 2.0 / 3.0, 2);
  const auto tr = simulate(p, PiecewiseConstantSignal::constant(1.0), {}, xs, 1e-3, 5.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    ASSERT_LT((tr.states[k] - xs).norm(), 1e-12);
    ASSERT_NEAR(tr.outputs[k](0), 1.0, 1e-12);
  }
}

TEST(Simulate, ZeroInputZeroStateStaysZero) {
  const auto tr = simulate({}, PiecewiseConstantSignal::constant(0.0), {2.0, 0.5},
                           Vector::Zero(3), 1e-3, 3.0);
  for (const auto& x : tr.states) ASSERT_EQ(x.norm(), 0.0);
}

TEST(Simulate, GridAndShapes) {
  const auto tr = simulate({}, PiecewiseConstantSignal::constant(1.0), {}, Vector::Zero(3), 1e-3, 1.0);
  ASSERT_EQ(tr.size(), 1001u);
  EXPECT_NEAR(tr.times.back(), 1.0, 1e-12);
  EXPECT_EQ(tr.inputs.size(), tr.size());
  EXPECT_THROW(simulate({}, PiecewiseConstantSignal::constant(1.0), {}, Vector::Zero(2), 1e-3, 1.0),
               UnsupportedShape);
  EXPECT_THROW(simulate({}, PiecewiseConstantSignal::constant(1.0), {}, Vector::Zero(3), -1.0, 1.0),
               InvalidParameter);
}

TEST(Simulate, LeakBreaksTankTwoAtOnset) {
  TankParams p;
  const PiecewiseConstantSignal u({0.0, 1.0}, {2.0, 1.0});
  const auto tr = simulate(p, u, {2.0, 0.5}, Vector::Constant(3, 2.0), 1e-3, 4.0);
  // Slope of x2 just before and just after the fault.
  const std::size_t k = 2000;
  const double before = (tr.states[k](1) - tr.states[k - 1](1)) / 1e-3;
  const double after = (tr.states[k + 2](1) - tr.states[k + 1](1)) / 1e-3;
  // The leak removes delta_bar * x2 / psi2 from tank two.
  EXPECT_NEAR(after - before, -0.5 * tr.states[k](1) / p.psi[1], 5e-3);
  EXPECT_EQ(tr.fault_flows[k - 1], 0.0);
  EXPECT_GT(tr.fault_flows[k], 0.0);
}

TEST(Simulate, SwitchedMatrixEquivalence) {
  TankParams p;
  p.delta_bar = 0.5;
  const PiecewiseConstantSignal u({0.0, 1.0}, {2.0, 1.0});
  const Vector x0 = vec3(2.4, 3.6, 1.8);
  const auto a = simulate(p, u, {2.0, 0.5}, x0, 1e-3, 10.0);
  const auto b = simulate_switched(build_healthy(p), build_faulty(p), u, 2.0, x0, 1e-3, 10.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_LE((a.states[k] - b.states[k]).norm(), 1e-6 * std::max(1.0, b.states[k].norm()));
  }
}

TEST(Simulate, Rk4AgreesWithExactZoh) {
  TankParams p;
  const PiecewiseConstantSignal u({0.0, 1.0}, {2.0, 1.0});
  const auto rk = simulate(p, u, {2.0, 0.5}, Vector::Constant(3, 4.0), 1e-3, 6.0);
  const auto ex = simulate(p, u, {2.0, 0.5}, Vector::Constant(3, 4.0), 1e-3, 6.0,
                           Integrator::kExactZoh);
  for (std::size_t k = 0; k < rk.size(); ++k) ASSERT_LT((rk.states[k] - ex.states[k]).norm(), 1e-11);
}

TEST(Simulate, Rk4FourthOrderConvergence) {
  // Smooth problem (constant input, no fault) against the exact propagator.
  const TankParams p;
  const StateSpace ss = build_healthy(p);
  const Vector x0 = vec3(4, 0.5, 1);
  const double T = 2.0;
  Matrix aug = Matrix::Zero(4, 4);
  aug.topLeftCorner(3, 3) = ss.A * T;
  aug.topRightCorner(3, 1) = ss.B * T;
  Vector z0(4);
  z0 << x0, 1.0;
  const Vector exact = (oracle::expm(aug) * z0).head(3);
  auto err = [&](double dt) {
    const auto tr = simulate(p, PiecewiseConstantSignal::constant(1.0), {}, x0, dt, T);
    return (tr.states.back() - exact).norm();
  };
  const double e1 = err(0.1), e2 = err(0.05);
  const double order = std::log2(e1 / e2);
  EXPECT_GT(order, 3.7);
  EXPECT_LT(order, 4.3);
}

TEST(Discretize, MatchesOracle) {
  const StateSpace ss = build_healthy({});
  const auto d = discretize_zoh(ss.A, ss.B, 0.01);
  Matrix aug = Matrix::Zero(4, 4);
  aug.topLeftCorner(3, 3) = ss.A * 0.01;
  aug.topRightCorner(3, 1) = ss.B * 0.01;
  const Matrix E = oracle::expm(aug);
  EXPECT_LT((d.Ad - E.topLeftCorner(3, 3)).norm(), 1e-14);
  EXPECT_LT((d.Bd - E.topRightCorner(3, 1)).norm(), 1e-14);
}

TEST(Simulate, VolumesStayNonnegative) {
  // Compartmental flows with nonnegative input keep volumes nonnegative.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> box(0.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x0 = vec3(box(rng), box(rng), box(rng));
    const auto tr = simulate({}, PiecewiseConstantSignal({0.0, 1.0}, {2.0, 1.0}), {2.0, 0.5}, x0,
                             1e-3, 10.0);
    for (const auto& x : tr.states) ASSERT_GE(x.minCoeff(), -1e-12);
  }
}
