#include "tankfdi/askf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tankfdi {

void DiscreteModel::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || Theta.cols() != n || Q.rows() != B.cols() ||
      Q.cols() != B.cols() || R.rows() != Theta.rows() || R.cols() != Theta.rows()) {
    throw UnsupportedShape("inconsistent discrete model dimensions");
  }
  if (!Q.isApprox(Q.transpose(), 1e-12) || !R.isApprox(R.transpose(), 1e-12)) {
    throw InvalidParameter("noise covariances must be symmetric");
  }
  if (Eigen::LLT<Matrix>(R).info() != Eigen::Success) {
    throw InvalidParameter("measurement covariance R must be positive definite");
  }
  if (Q.size() > 0 && Eigen::SelfAdjointEigenSolver<Matrix>(Q).eigenvalues().minCoeff() < -1e-12) {
    throw InvalidParameter("process covariance Q must be positive semidefinite");
  }
}

void ScalingParams::validate() const {
  if (a < 0.0 || b < 0.0 || c < 0.0) throw InvalidParameter("scaling weights must be nonnegative");
  if (std::abs(a + b + c - 1.0) > 1e-12) {
    throw InvalidParameter("scaling weights must sum to 1, got " + std::to_string(a + b + c));
  }
  if (!(phi0 >= 0.0)) throw InvalidParameter("phi0 must be nonnegative");
}

Prediction predict(const FilterState& state, const DiscreteModel& model, const Vector& u) {
  Prediction p;
  p.xpred = model.A * state.xhat + model.B * u;
  p.Ppred = model.A * state.P * model.A.transpose() +
            state.phi * (model.B * model.Q * model.B.transpose());
  return p;
}

InnovationParts innovation_decomposition(const Matrix& propagated_P, const DiscreteModel& model,
                                         double phi) {
  InnovationParts parts;
  const Matrix& th = model.Theta;
  parts.beta = (th * propagated_P * th.transpose() + model.R).trace();
  parts.gamma_unit = (th * model.B * model.Q * model.B.transpose() * th.transpose()).trace();
  parts.gamma = phi * parts.gamma_unit;
  parts.alpha = parts.beta + parts.gamma;
  parts.identifiable = parts.gamma_unit > 0.0;
  return parts;
}

ScalingResult update_scaling(const ScalingParams& params, double phi_prev, double nu_sq,
                             double beta, double gamma_unit) {
  ScalingResult r;
  if (!(gamma_unit > 0.0)) {
    r.phi = phi_prev;
    r.upsilon = phi_prev;
    r.frozen = true;
    return r;
  }
  const double alpha = beta + phi_prev * gamma_unit;
  if (std::abs(nu_sq - alpha) <= 1e-9 * alpha) {
    r.consistency_branch = true;
    r.upsilon = params.a * params.phi0 + (params.b + params.c) * phi_prev;
  } else {
    r.upsilon = params.a * params.phi0 + params.b * phi_prev +
                params.c * (nu_sq - beta) / gamma_unit;
  }
  r.phi = std::max(r.upsilon, 0.0);
  return r;
}

FilterState update(const FilterState& state, const DiscreteModel& model, const Vector& xpred,
                   const Matrix& Ppred, const Vector& y) {
  const Matrix& th = model.Theta;
  const Matrix innovation_cov = symmetrized(th * Ppred * th.transpose() + model.R);
  Eigen::LLT<Matrix> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("innovation covariance is not positive definite at step " +
                         std::to_string(state.k + 1));
  }
  const Vector nu = y - th * xpred;
  // K = Ppred Theta^T S^{-1}, computed as (S^{-1} Theta Ppred)^T.
  const Matrix gain = llt.solve(th * Ppred).transpose();

  FilterState next = state;
  next.xhat = xpred + gain * nu;
  const auto n = Ppred.rows();
  // Joseph form keeps P positive semidefinite when phi makes Ppred large.
  const Matrix ikh = Matrix::Identity(n, n) - gain * th;
  next.P = symmetrized(ikh * Ppred * ikh.transpose() + gain * model.R * gain.transpose());
  next.k = state.k + 1;
  next.innovation = nu.size() > 0 ? nu(0) : 0.0;
  if (!next.xhat.allFinite() || !next.P.allFinite()) {
    throw DivergenceError("filter diverged at step " + std::to_string(next.k));
  }
  return next;
}

FilterState askf_step(const FilterState& state, const DiscreteModel& model,
                      const ScalingParams& params, const Vector& u, const Vector& y) {
  const Matrix propagated = model.A * state.P * model.A.transpose();
  const Vector xpred = model.A * state.xhat + model.B * u;
  const InnovationParts parts = innovation_decomposition(propagated, model, state.phi);
  const Vector nu = y - model.Theta * xpred;
  const ScalingResult scaling =
      update_scaling(params, state.phi, nu.squaredNorm(), parts.beta, parts.gamma_unit);

  FilterState scaled = state;
  scaled.phi = scaling.phi;
  const Prediction pred = predict(scaled, model, u);
  FilterState next = update(scaled, model, pred.xpred, pred.Ppred, y);
  next.scaling_frozen = scaling.frozen;
  return next;
}

std::vector<FilterState> run_askf(const DiscreteModel& model, const ScalingParams& params,
                                  const Vector& xbar0, const Matrix& P0,
                                  const std::vector<Vector>& inputs,
                                  const std::vector<Vector>& measurements) {
  model.validate();
  params.validate();
  if (inputs.size() != measurements.size()) {
    throw InvalidParameter("inputs and measurements must have equal length");
  }
  if (xbar0.size() != model.states() || P0.rows() != model.states() ||
      P0.cols() != model.states()) {
    throw UnsupportedShape("initial belief dimension mismatch");
  }

  FilterState state;
  state.xhat = xbar0;
  state.P = symmetrized(P0);
  state.phi = params.phi0;

  std::vector<FilterState> out;
  out.reserve(measurements.size());
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    state = askf_step(state, model, params, inputs[k], measurements[k]);
    out.push_back(state);
  }
  return out;
}

}  // namespace tankfdi
