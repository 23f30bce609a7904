#pragma once

#include <array>
#include <vector>

#include "tankfdi/common.hpp"

namespace tankfdi {

/// Physical parameters of the three-tank cascade.
///
/// States are tank volumes; the level of tank i is x_i / psi[i].
struct TankParams {
  std::array<double, 3> psi{2.0, 1.0, 2.0};    ///< cross-sectional areas [m^2]
  std::array<double, 3> delta{1.0, 1.5, 1.0};  ///< outflow coefficients [m^2/s]
  double delta_bar = 0.0;                      ///< leak coefficient of tank 2 [m^2/s]

  /// Throws InvalidParameter unless psi, delta > 0 and delta_bar >= 0.
  void validate() const;
};

/// Continuous-time LTI realization x' = A x + B u + F f, y = C x.
struct StateSpace {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix F;

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }

  /// Throws UnsupportedShape on inconsistent dimensions.
  void validate() const;
};

/// Piecewise-constant scalar signal. Segment i covers
/// [breakpoints[i], breakpoints[i+1]); the last segment extends to infinity.
class PiecewiseConstantSignal {
 public:
  PiecewiseConstantSignal() = default;
  PiecewiseConstantSignal(std::vector<double> breakpoints, std::vector<double> values);

  static PiecewiseConstantSignal constant(double value) { return {{0.0}, {value}}; }

  /// Value of the containing segment. Times before the first breakpoint
  /// take the first value.
  double operator()(double t) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breakpoints_{0.0};
  std::vector<double> values_{0.0};
};

struct FaultProfile {
  double t_f = 2.0;
  double delta_bar = 0.0;
};

/// Sampled simulation output on a fixed grid t_k = k * dt.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> outputs;
  std::vector<Vector> inputs;
  std::vector<double> fault_flows;

  std::size_t size() const { return times.size(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

enum class Integrator {
  kRk4,         ///< classical fixed-step Runge-Kutta
  kExactZoh,    ///< matrix exponential per step (plant is piecewise LTI)
};

StateSpace build_healthy(const TankParams& params);

/// Healthy realization with the leak folded into A(1,1) = -(delta_2 + delta_bar) / psi_2.
StateSpace build_faulty(const TankParams& params);

/// Leak outflow of tank 2: zero before t_f, (delta_bar / psi_2) * x2 afterwards.
double fault_flow(const FaultProfile& profile, const TankParams& params, double x2, double t);

/// True once the sample instant t has reached the fault onset.
bool fault_active(const FaultProfile& profile, double t, double dt);

/// Integrates the plant on [0, horizon] with fixed step dt. Inputs and the
/// fault state are held constant across each step (taken at its left end);
/// the leak flow itself is state dependent within the step.
Trajectory simulate(const TankParams& params, const PiecewiseConstantSignal& u,
                    const FaultProfile& fault, const Vector& x0, double dt, double horizon,
                    Integrator integrator = Integrator::kRk4);

/// Variant that switches between two arbitrary state matrices at t_f with
/// no explicit fault input. Used to cross-check the fault-input formulation.
Trajectory simulate_switched(const StateSpace& healthy, const StateSpace& faulty,
                             const PiecewiseConstantSignal& u, double t_f, const Vector& x0,
                             double dt, double horizon);

/// Solves A x* + B u = 0. Throws SingularMatrix if A is singular.
Vector steady_state(const StateSpace& ss, double u_const);

/// Tank levels h = x / psi.
Vector levels(const TankParams& params, const Vector& x);

/// Zero-order-hold discretization of (A, B) with period ts.
struct DiscretePair {
  Matrix Ad;
  Matrix Bd;
};
DiscretePair discretize_zoh(const Matrix& A, const Matrix& B, double ts);

/// Number of whole steps of size dt in [0, horizon]; rejects non-positive values.
std::size_t step_count(double dt, double horizon);

/// One classical RK4 step of x' = f(t, x).
template <typename Rhs>
Vector rk4_step(const Rhs& f, double t, const Vector& x, double dt) {
  const Vector k1 = f(t, x);
  const Vector k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Vector k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Vector k4 = f(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace tankfdi
