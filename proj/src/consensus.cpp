#include "tankfdi/consensus.hpp"

#include <string>

namespace tankfdi {

void SensorNetwork::validate(Eigen::Index states) const {
  if (sensors.empty()) throw InvalidParameter("sensor network needs at least one sensor");
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const Sensor& s = sensors[i];
    if (s.Theta.cols() != states || s.R.rows() != s.Theta.rows() || s.R.cols() != s.Theta.rows()) {
      throw UnsupportedShape("sensor " + std::to_string(i) + " has inconsistent dimensions");
    }
    if (Eigen::LLT<Matrix>(s.R).info() != Eigen::Success) {
      throw InvalidParameter("sensor " + std::to_string(i) + " noise covariance is not positive definite");
    }
  }
}

SensorNetwork SensorNetwork::identical(const Matrix& Theta, const Matrix& R, std::size_t n) {
  SensorNetwork net;
  net.sensors.assign(n, Sensor{Theta, R});
  return net;
}

Matrix fused_information(const SensorNetwork& net) {
  if (net.sensors.empty()) throw InvalidParameter("sensor network needs at least one sensor");
  const auto n = net.sensors.front().Theta.cols();
  net.validate(n);
  Matrix h = Matrix::Zero(n, n);
  for (const Sensor& s : net.sensors) {
    h += s.Theta.transpose() * Eigen::LLT<Matrix>(s.R).solve(s.Theta);
  }
  return symmetrized(h / static_cast<double>(net.size()));
}

Vector fused_measurement(const SensorNetwork& net, const std::vector<Vector>& measurements) {
  if (measurements.size() != net.size()) {
    throw InvalidParameter("expected one measurement per sensor");
  }
  const auto n = net.sensors.front().Theta.cols();
  Vector z = Vector::Zero(n);
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Sensor& s = net.sensors[i];
    z += s.Theta.transpose() * Eigen::LLT<Matrix>(s.R).solve(measurements[i]);
  }
  return z / static_cast<double>(net.size());
}

ConsensusState consensus_update(const ConsensusState& state, const SensorNetwork& net,
                                const std::vector<Vector>& measurements,
                                const ConsensusOptions& options) {
  const auto n = state.xbar.size();
  net.validate(n);
  const double prior_scale =
      options.prior_scaling == PriorScaling::kSensorCount ? static_cast<double>(net.size()) : 1.0;

  Eigen::LLT<Matrix> prior(symmetrized(prior_scale * state.P));
  if (prior.info() != Eigen::Success) {
    throw SingularMatrix("prior covariance is not positive definite at step " +
                         std::to_string(state.k));
  }
  const Matrix H = fused_information(net);
  const Matrix information = symmetrized(prior.solve(Matrix::Identity(n, n)) + H);
  Eigen::LLT<Matrix> info_llt(information);
  if (info_llt.info() != Eigen::Success) {
    throw SingularMatrix("fused information matrix is singular at step " + std::to_string(state.k));
  }

  ConsensusState next = state;
  next.Pk = symmetrized(info_llt.solve(Matrix::Identity(n, n)));
  const Vector z = fused_measurement(net, measurements);
  next.xm = state.xbar + next.Pk * (z - H * state.xbar);
  if (!next.xm.allFinite()) throw DivergenceError("consensus estimate became non-finite");
  return next;
}

ConsensusState consensus_predict(const ConsensusState& state, const DiscreteModel& model,
                                 const Vector& u, const ConsensusOptions& options) {
  ConsensusState next = state;
  next.P = symmetrized(model.A * state.Pk * model.A.transpose() +
                       model.B * model.Q * model.B.transpose());
  next.xbar = model.A * state.xm;
  if (options.propagate_input) next.xbar += model.B * u;
  next.k = state.k + 1;
  return next;
}

std::vector<ConsensusState> run_consensus(const DiscreteModel& model, const SensorNetwork& net,
                                          const Vector& xbar0, const Matrix& P0,
                                          const std::vector<Vector>& inputs,
                                          const std::vector<std::vector<Vector>>& measurements,
                                          const ConsensusOptions& options) {
  model.validate();
  net.validate(model.states());
  if (inputs.size() != measurements.size()) {
    throw InvalidParameter("inputs and measurements must have equal length");
  }
  ConsensusState state;
  state.xbar = xbar0;
  state.xm = xbar0;
  state.P = symmetrized(P0);
  state.Pk = symmetrized(P0);

  std::vector<ConsensusState> out;
  out.reserve(measurements.size());
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    state = consensus_predict(state, model, inputs[k], options);
    state = consensus_update(state, net, measurements[k], options);
    out.push_back(state);
  }
  return out;
}

}  // namespace tankfdi
