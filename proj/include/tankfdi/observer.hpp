#pragma once

#include <complex>
#include <vector>

#include "tankfdi/analysis.hpp"
#include "tankfdi/common.hpp"
#include "tankfdi/model.hpp"

namespace tankfdi {

/// Observable canonical realization z' = A_o z + B_o u, y = C_o z with x = Delta z.
struct CanonicalRealization {
  Matrix A_o;
  Matrix B_o;
  Matrix C_o;
  Matrix Qbar_O;  ///< observability matrix of (A_o, C_o)
  Matrix Delta;   ///< Q_O^{-1} Qbar_O
  Polynomial characteristic;
};

struct ObserverDesign {
  std::vector<std::complex<double>> desired_poles;
  Polynomial desired_polynomial;
  Vector Psi_o;  ///< gain in canonical coordinates
  Vector Psi;    ///< physical gain, Delta * Psi_o
  Matrix Gamma_d;  ///< error dynamics A - Psi C
  CanonicalRealization canonical;
};

/// Requires a SISO observable pair; throws NotObservable otherwise.
CanonicalRealization canonical_form(const StateSpace& ss);

/// Luenberger gain by coefficient matching in observable canonical form.
ObserverDesign place_observer_poles(const StateSpace& ss,
                                    const std::vector<std::complex<double>>& desired);

/// Output samples y_k on the grid t_k = k dt, consumed by run_luenberger.
/// Inside a step the measurement is reconstructed by cubic interpolation
/// through the neighbouring samples, so the observer sees y at RK4 stage times.
class SampledOutput {
 public:
  SampledOutput(std::vector<Vector> samples, double dt);

  double dt() const { return dt_; }
  std::size_t size() const { return samples_.size(); }
  const Vector& at(std::size_t k) const { return samples_[k]; }
  /// Value at t_k + dt/2.
  Vector midpoint(std::size_t k) const;

 private:
  std::vector<Vector> samples_;
  double dt_;
};

/// Integrates xhat' = A xhat + B u + Psi (y - C xhat) with RK4 on the grid of y.
/// The returned trajectory carries xhat in `states` and yhat in `outputs`.
Trajectory run_luenberger(const StateSpace& ss, const Vector& Psi,
                          const PiecewiseConstantSignal& u, const SampledOutput& y,
                          const Vector& xhat0);

}  // namespace tankfdi
