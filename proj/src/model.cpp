#include "tankfdi/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace tankfdi {

void TankParams::validate() const {
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(psi[i] > 0.0) || !std::isfinite(psi[i])) {
      throw InvalidParameter("psi[" + std::to_string(i) + "] must be positive, got " +
                             std::to_string(psi[i]));
    }
    if (!(delta[i] > 0.0) || !std::isfinite(delta[i])) {
      throw InvalidParameter("delta[" + std::to_string(i) + "] must be positive, got " +
                             std::to_string(delta[i]));
    }
  }
  if (!(delta_bar >= 0.0) || !std::isfinite(delta_bar)) {
    throw InvalidParameter("delta_bar must be nonnegative, got " + std::to_string(delta_bar));
  }
}

void StateSpace::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || F.rows() != n) {
    throw UnsupportedShape("inconsistent state-space dimensions");
  }
}

PiecewiseConstantSignal::PiecewiseConstantSignal(std::vector<double> breakpoints,
                                                 std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
    throw InvalidParameter("signal needs one value per breakpoint");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1])) {
      throw InvalidParameter("signal breakpoints must be strictly increasing");
    }
  }
}

double PiecewiseConstantSignal::operator()(double t) const {
  // Breakpoints that coincide with a sample instant up to roundoff belong to
  // the segment they open.
  const double slack = 1e-9;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t + slack);
  if (it == breakpoints_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1];
}

StateSpace build_healthy(const TankParams& params) {
  params.validate();
  const auto& psi = params.psi;
  const auto& d = params.delta;
  StateSpace ss;
  ss.A = Matrix::Zero(3, 3);
  ss.A(0, 0) = -d[0] / psi[0];
  ss.A(1, 0) = d[0] / psi[0];
  ss.A(1, 1) = -d[1] / psi[1];
  ss.A(2, 1) = d[1] / psi[1];
  ss.A(2, 2) = -d[2] / psi[2];
  ss.B = Matrix::Zero(3, 1);
  ss.B(0, 0) = 1.0;
  ss.C = Matrix::Zero(1, 3);
  ss.C(0, 2) = 1.0 / psi[2];
  ss.F = Matrix::Zero(3, 1);
  ss.F(1, 0) = -1.0;
  return ss;
}

StateSpace build_faulty(const TankParams& params) {
  StateSpace ss = build_healthy(params);
  ss.A(1, 1) = -(params.delta[1] + params.delta_bar) / params.psi[1];
  return ss;
}

double fault_flow(const FaultProfile& profile, const TankParams& params, double x2, double t) {
  if (t < profile.t_f) return 0.0;
  return profile.delta_bar / params.psi[1] * x2;
}

bool fault_active(const FaultProfile& profile, double t, double dt) {
  return t >= profile.t_f - 1e-9 * dt;
}

std::size_t step_count(double dt, double horizon) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidParameter("horizon must be positive");
  }
  return static_cast<std::size_t>(std::llround(std::floor(horizon / dt + 1e-9)));
}

namespace {

void check_finite(const Vector& x, double t) {
  if (!x.allFinite()) {
    throw DivergenceError("state became non-finite at t = " + std::to_string(t));
  }
}

}  // namespace

Trajectory simulate(const TankParams& params, const PiecewiseConstantSignal& u,
                    const FaultProfile& fault, const Vector& x0, double dt, double horizon,
                    Integrator integrator) {
  params.validate();
  if (x0.size() != 3) throw UnsupportedShape("x0 must have 3 entries");
  if (!x0.allFinite()) throw InvalidParameter("x0 must be finite");
  const std::size_t steps = step_count(dt, horizon);

  const StateSpace ss = build_healthy(params);
  TankParams leak = params;
  leak.delta_bar = fault.delta_bar;

  DiscretePair healthy_d, faulty_d;
  if (integrator == Integrator::kExactZoh) {
    healthy_d = discretize_zoh(ss.A, ss.B, dt);
    faulty_d = discretize_zoh(build_faulty(leak).A, ss.B, dt);
  }

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.outputs.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);
  traj.fault_flows.reserve(steps + 1);

  Vector x = x0;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool faulty = fault_active(fault, t, dt);
    const double uk = u(t);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.outputs.push_back(ss.C * x);
    traj.inputs.push_back(Vector::Constant(1, uk));
    traj.fault_flows.push_back(faulty ? fault.delta_bar / params.psi[1] * x(1) : 0.0);
    if (k == steps) break;

    if (integrator == Integrator::kExactZoh) {
      const DiscretePair& d = faulty ? faulty_d : healthy_d;
      x = d.Ad * x + d.Bd * uk;
    } else {
      auto rhs = [&](double, const Vector& s) -> Vector {
        Vector dx = ss.A * s + ss.B * uk;
        if (faulty) dx += ss.F * (fault.delta_bar / params.psi[1] * s(1));
        return dx;
      };
      x = rk4_step(rhs, t, x, dt);
    }
    check_finite(x, t + dt);
  }
  return traj;
}

Trajectory simulate_switched(const StateSpace& healthy, const StateSpace& faulty,
                             const PiecewiseConstantSignal& u, double t_f, const Vector& x0,
                             double dt, double horizon) {
  healthy.validate();
  faulty.validate();
  const std::size_t steps = step_count(dt, horizon);
  FaultProfile onset{t_f, 0.0};

  Trajectory traj;
  Vector x = x0;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool switched = fault_active(onset, t, dt);
    const StateSpace& ss = switched ? faulty : healthy;
    const double uk = u(t);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.outputs.push_back(ss.C * x);
    traj.inputs.push_back(Vector::Constant(1, uk));
    traj.fault_flows.push_back(0.0);
    if (k == steps) break;
    auto rhs = [&](double, const Vector& s) -> Vector { return ss.A * s + ss.B * uk; };
    x = rk4_step(rhs, t, x, dt);
    check_finite(x, t + dt);
  }
  return traj;
}

Vector steady_state(const StateSpace& ss, double u_const) {
  ss.validate();
  Eigen::FullPivLU<Matrix> lu(ss.A);
  if (!lu.isInvertible()) throw SingularMatrix("steady state undefined: A is singular");
  return lu.solve(-ss.B * Vector::Constant(ss.inputs(), u_const));
}

Vector levels(const TankParams& params, const Vector& x) {
  Vector h(3);
  for (int i = 0; i < 3; ++i) h(i) = x(i) / params.psi[static_cast<std::size_t>(i)];
  return h;
}

DiscretePair discretize_zoh(const Matrix& A, const Matrix& B, double ts) {
  if (!(ts > 0.0)) throw InvalidParameter("sampling period must be positive");
  const auto n = A.rows();
  const auto p = B.cols();
  // exp([A B; 0 0] ts) = [Ad Bd; 0 I]
  Matrix m = Matrix::Zero(n + p, n + p);
  m.topLeftCorner(n, n) = A;
  m.topRightCorner(n, p) = B;
  const Matrix phi = (m * ts).exp();
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, p)};
}

}  // namespace tankfdi
