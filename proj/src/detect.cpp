#include "tankfdi/detect.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "tankfdi/analysis.hpp"

namespace tankfdi {

namespace {

double modal_sum(const std::vector<Mode>& modes, double t) {
  double acc = 0.0;
  for (const Mode& m : modes) acc += m.coefficient * std::exp(m.pole * t);
  return acc;
}

// Right eigenvector for a real eigenvalue: the null direction of (G - lambda I).
Vector null_vector(const Matrix& g, double lambda) {
  const auto n = g.rows();
  Eigen::JacobiSVD<Matrix> svd(g - lambda * Matrix::Identity(n, n), Eigen::ComputeFullV);
  return svd.matrixV().col(n - 1);
}

ThresholdCurve sampled_threshold(const Matrix& gamma, const Matrix& C, const Vector& e_hat,
                                 double horizon, double dt) {
  ThresholdCurve curve;
  curve.e_hat = e_hat;
  curve.sampled = true;
  curve.sample_dt = dt;
  curve.gamma = gamma;
  const std::size_t steps = step_count(dt, horizon);
  const Matrix step = (gamma * dt).exp();
  Eigen::RowVectorXd row = C.row(0);
  curve.rows.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    curve.rows.push_back(row);
    row = row * step;
  }
  return curve;
}

Eigen::RowVectorXd output_row(const ThresholdCurve& c, double t) {
  const double pos = std::max(t, 0.0) / c.sample_dt;
  auto k = static_cast<std::size_t>(std::floor(pos + 1e-9));
  k = std::min(k, c.rows.size() - 1);
  const double rest = std::max(t, 0.0) - static_cast<double>(k) * c.sample_dt;
  if (std::abs(rest) <= 1e-9 * c.sample_dt) return c.rows[k];
  return c.rows[k] * (c.gamma * rest).exp();
}

}  // namespace

double ThresholdCurve::operator()(double t) const {
  if (!sampled) return std::max(modal_sum(modes, t), floor);
  const Eigen::RowVectorXd row = output_row(*this, t);
  return std::max(row.cwiseAbs().dot(e_hat.transpose().cwiseAbs()), floor);
}

double ThresholdCurve::signed_value(double t) const {
  return sampled ? output_row(*this, t).dot(e_hat.transpose()) : modal_sum(signed_modes, t);
}

ResidualTrace residual(const Trajectory& plant, const Trajectory& observer) {
  if (plant.size() != observer.size()) {
    throw InvalidParameter("residual: grid mismatch (" + std::to_string(plant.size()) + " vs " +
                           std::to_string(observer.size()) + " samples)");
  }
  ResidualTrace res;
  res.times = plant.times;
  res.residuals.reserve(plant.size());
  for (std::size_t k = 0; k < plant.size(); ++k) {
    const double t = plant.times[k];
    if (std::abs(t - observer.times[k]) > 1e-9 * std::max(1.0, std::abs(t))) {
      throw InvalidParameter("residual: grid mismatch at sample " + std::to_string(k));
    }
    res.residuals.push_back(plant.outputs[k](0) - observer.outputs[k](0));
  }
  return res;
}

ThresholdCurve build_threshold(const Matrix& Gamma_d, const Matrix& C, const Vector& e_hat,
                               ThresholdKind kind, double floor, double fallback_horizon,
                               double fallback_dt) {
  if (!(floor >= 0.0) || !std::isfinite(floor)) {
    throw InvalidParameter("threshold floor must be finite and nonnegative");
  }
  const auto n = Gamma_d.rows();
  if (Gamma_d.cols() != n || C.cols() != n || C.rows() != 1 || e_hat.size() != n) {
    throw UnsupportedShape("threshold needs square Gamma_d, a 1 x n output row and an n-vector bound");
  }
  const auto lambdas = eigenvalues(Gamma_d);

  bool modal = true;
  for (std::size_t i = 0; i < lambdas.size() && modal; ++i) {
    if (lambdas[i].imag() != 0.0) modal = false;
    for (std::size_t j = 0; j < i && modal; ++j) {
      const double scale = std::max(1.0, std::abs(lambdas[i]));
      if (std::abs(lambdas[i] - lambdas[j]) <= 1e-8 * scale) modal = false;
    }
  }

  Matrix V(n, n);
  if (modal) {
    for (Eigen::Index i = 0; i < n; ++i) {
      V.col(i) = null_vector(Gamma_d, lambdas[static_cast<std::size_t>(i)].real());
    }
    Eigen::JacobiSVD<Matrix> svd(V);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) <= 1e-12 * sv(0)) modal = false;
  }
  if (!modal) {
    auto curve = sampled_threshold(Gamma_d, C, e_hat, fallback_horizon, fallback_dt);
    curve.floor = floor;
    return curve;
  }

  const auto lu = V.fullPivLu();
  const Vector weights = lu.solve(e_hat);
  const Matrix W = lu.inverse();
  const Eigen::RowVectorXd output_gain = C.row(0) * V;

  ThresholdCurve curve;
  curve.e_hat = e_hat;
  curve.floor = floor;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pole = lambdas[static_cast<std::size_t>(i)].real();
    const double c = output_gain(i) * weights(i);
    double k = std::abs(c);
    if (kind == ThresholdKind::kBox) {
      k = (output_gain(i) * W.row(i)).cwiseAbs().dot(e_hat.transpose().cwiseAbs());
    }
    curve.signed_modes.push_back({c, pole});
    curve.modes.push_back({k, pole});
  }
  return curve;
}

DetectionReport detect(const ResidualTrace& res, const ThresholdCurve& threshold,
                       std::optional<double> t_f_hint) {
  DetectionReport report;
  report.t_f_configured = t_f_hint;
  report.margin_trace.reserve(res.times.size());
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    const double t = res.times[k];
    const double margin = threshold(t) - std::abs(res.residuals[k]);
    report.margin_trace.push_back(margin);
    if (report.detected || !(margin < 0.0)) continue;

    report.detected = true;
    report.t_d_sample = t;
    double crossing = t;
    if (k > 0) {
      const double before = -report.margin_trace[k - 1];  // <= 0
      const double after = -margin;                       // > 0
      crossing = res.times[k - 1] + (t - res.times[k - 1]) * (-before) / (after - before);
    }
    report.t_d_exact = crossing;
    report.t_d = std::round(crossing * 1e4) / 1e4;
  }
  return report;
}

Vector initial_error_bound(const Vector& x_lo, const Vector& x_hi, const Vector& xhat0) {
  if (x_lo.size() != x_hi.size() || x_lo.size() != xhat0.size()) {
    throw UnsupportedShape("initial error bound: dimension mismatch");
  }
  Vector e(xhat0.size());
  for (Eigen::Index i = 0; i < xhat0.size(); ++i) {
    if (!(x_lo(i) <= xhat0(i) && xhat0(i) <= x_hi(i))) {
      throw InvalidParameter("initial error bound requires x_lo <= xhat0 <= x_hi (component " +
                             std::to_string(i) + ")");
    }
    e(i) = std::max(x_hi(i) - xhat0(i), xhat0(i) - x_lo(i));
  }
  return e;
}

}  // namespace tankfdi
