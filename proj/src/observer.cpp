#include "tankfdi/observer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tankfdi {

CanonicalRealization canonical_form(const StateSpace& ss) {
  ss.validate();
  if (ss.outputs() != 1) throw UnsupportedShape("canonical form requires a single output");
  const auto n = ss.states();
  const RankReport qo = observability_matrix(ss);
  if (!qo.full_rank) {
    throw NotObservable("(A, C) is not observable: rank " + std::to_string(qo.rank) + " < " +
                        std::to_string(n));
  }

  CanonicalRealization out;
  out.characteristic = characteristic_polynomial(ss.A);
  const auto& eta = out.characteristic.coefficients;
  out.A_o = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) out.A_o(i, i - 1) = 1.0;
    out.A_o(i, n - 1) = -eta[static_cast<std::size_t>(n - i)];
  }
  out.C_o = Matrix::Zero(1, n);
  out.C_o(0, n - 1) = 1.0;
  out.Qbar_O = observability_stack(out.A_o, out.C_o);

  Eigen::FullPivLU<Matrix> lu(qo.matrix);
  out.Delta = lu.solve(out.Qbar_O);
  Eigen::FullPivLU<Matrix> delta_lu(out.Delta);
  if (!delta_lu.isInvertible()) throw NotObservable("canonical transformation is singular");
  out.B_o = delta_lu.solve(ss.B);
  return out;
}

namespace {

void require_conjugate_closed(const std::vector<std::complex<double>>& poles) {
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    const auto& p = poles[i];
    const double scale = std::max(1.0, std::abs(p));
    if (std::abs(p.imag()) <= 1e-12 * scale || used[i]) continue;
    bool matched = false;
    for (std::size_t j = 0; j < poles.size(); ++j) {
      if (j == i || used[j]) continue;
      if (std::abs(poles[j] - std::conj(p)) <= 1e-9 * scale) {
        used[i] = used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) throw InvalidParameter("desired poles must be closed under complex conjugation");
  }
}

}  // namespace

ObserverDesign place_observer_poles(const StateSpace& ss,
                                    const std::vector<std::complex<double>>& desired) {
  const auto n = ss.states();
  if (static_cast<Eigen::Index>(desired.size()) != n) {
    throw InvalidParameter("need exactly " + std::to_string(n) + " desired poles");
  }
  require_conjugate_closed(desired);

  ObserverDesign d;
  d.canonical = canonical_form(ss);
  d.desired_poles = desired;
  d.desired_polynomial = polynomial_from_roots(desired);

  // det(sI - (A_o - Psi_o C_o)) = s^n + (eta_1 + l_n) s^(n-1) + ... + (eta_n + l_1)
  const auto& eta = d.canonical.characteristic.coefficients;
  const auto& alpha = d.desired_polynomial.coefficients;
  d.Psi_o.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(n - i);
    d.Psi_o(i) = alpha[idx] - eta[idx];
  }
  d.Psi = d.canonical.Delta * d.Psi_o;
  d.Gamma_d = ss.A - d.Psi * ss.C;
  return d;
}

SampledOutput::SampledOutput(std::vector<Vector> samples, double dt)
    : samples_(std::move(samples)), dt_(dt) {
  if (!(dt > 0.0)) throw InvalidParameter("output sample period must be positive");
  if (samples_.empty()) throw InvalidParameter("output stream is empty");
}

Vector SampledOutput::midpoint(std::size_t k) const {
  const std::size_t n = samples_.size();
  if (k + 1 >= n) return samples_[std::min(k, n - 1)];
  const Vector& y0 = samples_[k];
  const Vector& y1 = samples_[k + 1];
  const bool has_prev = k >= 1;
  const bool has_next = k + 2 < n;
  if (has_prev && has_next) return (-samples_[k - 1] + 9.0 * y0 + 9.0 * y1 - samples_[k + 2]) / 16.0;
  if (has_next) return (3.0 * y0 + 6.0 * y1 - samples_[k + 2]) / 8.0;
  if (has_prev) return (-samples_[k - 1] + 6.0 * y0 + 3.0 * y1) / 8.0;
  return 0.5 * (y0 + y1);
}

Trajectory run_luenberger(const StateSpace& ss, const Vector& Psi,
                          const PiecewiseConstantSignal& u, const SampledOutput& y,
                          const Vector& xhat0) {
  ss.validate();
  const auto n = ss.states();
  if (Psi.size() != n || xhat0.size() != n) throw UnsupportedShape("observer dimension mismatch");
  if (y.at(0).size() != ss.outputs()) throw UnsupportedShape("output dimension mismatch");

  const double dt = y.dt();
  Trajectory traj;
  traj.times.reserve(y.size());
  traj.states.reserve(y.size());
  traj.outputs.reserve(y.size());
  traj.inputs.reserve(y.size());
  traj.fault_flows.assign(y.size(), 0.0);

  Vector xhat = xhat0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    const double uk = u(t);
    traj.times.push_back(t);
    traj.states.push_back(xhat);
    traj.outputs.push_back(ss.C * xhat);
    traj.inputs.push_back(Vector::Constant(ss.inputs(), uk));
    if (k + 1 == y.size()) break;

    const Vector u_vec = Vector::Constant(ss.inputs(), uk);
    const Vector& y_start = y.at(k);
    const Vector y_mid = y.midpoint(k);
    const Vector& y_end = y.at(k + 1);
    auto rhs = [&](double stage_t, const Vector& s) -> Vector {
      const double offset = stage_t - t;
      const Vector& ys = offset < 0.25 * dt ? y_start : (offset < 0.75 * dt ? y_mid : y_end);
      return ss.A * s + ss.B * u_vec + Psi * (ys - ss.C * s);
    };
    xhat = rk4_step(rhs, t, xhat, dt);
    if (!xhat.allFinite()) {
      throw DivergenceError("observer state became non-finite at t = " + std::to_string(t + dt));
    }
  }
  return traj;
}

}  // namespace tankfdi
