#pragma once

#include <vector>

#include "tankfdi/common.hpp"

namespace tankfdi {

/// x_k = A x_{k-1} + B (u_{k-1} + w),  y_k = Theta x_k + v,
/// w ~ N(0, Q), v ~ N(0, R).
struct DiscreteModel {
  Matrix A;
  Matrix B;
  Matrix Theta;
  Matrix Q;
  Matrix R;

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return Theta.rows(); }
  void validate() const;
};

/// Blend weights of the scaling recursion; a + b + c = 1.
struct ScalingParams {
  double a = 0.5;
  double b = 0.5 - 1e-15;
  double c = 1e-15;
  double phi0 = 1.0;

  void validate() const;
};

struct FilterState {
  Vector xhat;
  Matrix P;
  double phi = 1.0;
  long k = 0;
  double innovation = 0.0;      ///< nu_k (first component for vector outputs)
  bool scaling_frozen = false;  ///< gamma_unit <= 0 at this step
};

struct Prediction {
  Vector xpred;
  Matrix Ppred;
};

/// Split of the innovation covariance alpha = beta + gamma.
/// For vector outputs the scalar quantities are traces.
struct InnovationParts {
  double alpha = 0.0;
  double beta = 0.0;        ///< Theta A P A^T Theta^T + R
  double gamma = 0.0;       ///< phi * gamma_unit
  double gamma_unit = 0.0;  ///< Theta B Q B^T Theta^T
  bool identifiable = true; ///< gamma_unit > 0
};

struct ScalingResult {
  double phi = 0.0;
  double upsilon = 0.0;
  bool frozen = false;
  bool consistency_branch = false;
};

/// xpred = A xhat + B u;  Ppred = A P A^T + phi B Q B^T.
Prediction predict(const FilterState& state, const DiscreteModel& model, const Vector& u);

/// Innovation covariance parts with the prior covariance propagated by A.
InnovationParts innovation_decomposition(const Matrix& propagated_P, const DiscreteModel& model,
                                         double phi);

/// Scaling recursion:
///   Upsilon = a phi0 + b phi_prev + c (|nu|^2 - beta) / gamma_unit
/// or a phi0 + (b + c) phi_prev when |nu|^2 matches alpha = beta + phi_prev gamma_unit
/// to 1e-9 relative; phi = max(Upsilon, 0). A non-positive gamma_unit freezes phi.
ScalingResult update_scaling(const ScalingParams& params, double phi_prev, double nu_sq,
                             double beta, double gamma_unit);

/// Measurement update with the covariance-form Kalman gain.
FilterState update(const FilterState& state, const DiscreteModel& model, const Vector& xpred,
                   const Matrix& Ppred, const Vector& y);

/// One full predict / scale / update cycle.
FilterState askf_step(const FilterState& state, const DiscreteModel& model,
                      const ScalingParams& params, const Vector& u, const Vector& y);

/// Runs the filter over N samples. inputs[k] drives the state into the
/// instant of measurements[k]. Returns the N posterior states.
std::vector<FilterState> run_askf(const DiscreteModel& model, const ScalingParams& params,
                                  const Vector& xbar0, const Matrix& P0,
                                  const std::vector<Vector>& inputs,
                                  const std::vector<Vector>& measurements);

}  // namespace tankfdi
