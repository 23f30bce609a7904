#pragma once

#include <optional>
#include <vector>

#include "tankfdi/common.hpp"
#include "tankfdi/model.hpp"

namespace tankfdi {

struct Mode {
  double coefficient = 0.0;
  double pole = 0.0;
};

/// How the per-mode coefficients are made nonnegative.
///  kModal: |c_i| where c_i is the modal weight of C exp(Gamma t) e_hat.
///  kBox:   sum_j |(C v_i) w_ij| e_hat_j, which bounds every initial error
///          with |e_j| <= e_hat_j.
enum class ThresholdKind { kModal, kBox };

/// Decaying envelope on the fault-free output residual,
/// eps_bar(t) = max(sum_i k_i exp(p_i t), floor).
///
/// When the error dynamics are not diagonalizable with real eigenvalues the
/// curve falls back to the bound sum_j |C exp(Gamma t) e_j| e_hat_j, with
/// C exp(Gamma t) tabulated on a fixed grid and propagated exactly between
/// grid points.
struct ThresholdCurve {
  std::vector<Mode> modes;          ///< conservative (nonnegative coefficients)
  std::vector<Mode> signed_modes;   ///< C exp(Gamma t) e_hat as a modal sum
  Vector e_hat;
  bool sampled = false;
  double sample_dt = 0.0;
  Matrix gamma;
  std::vector<Eigen::RowVectorXd> rows;  ///< C exp(Gamma k sample_dt)
  double floor = 0.0;  ///< resolution limit of the computed residual

  double operator()(double t) const;
  double signed_value(double t) const;
};

struct ResidualTrace {
  std::vector<double> times;
  std::vector<double> residuals;
};

struct DetectionReport {
  bool detected = false;
  std::optional<double> t_d;          ///< interpolated crossing, rounded to 1e-4
  std::optional<double> t_d_sample;   ///< first grid time with |eps| > eps_bar
  std::optional<double> t_d_exact;    ///< interpolated crossing before rounding
  std::vector<double> margin_trace;   ///< eps_bar - |eps| per sample
  std::optional<double> t_f_configured;
};

/// eps = y - yhat on a shared time grid.
ResidualTrace residual(const Trajectory& plant, const Trajectory& observer);

/// Modal expansion of C exp(Gamma_d t) e_hat.
ThresholdCurve build_threshold(const Matrix& Gamma_d, const Matrix& C, const Vector& e_hat,
                               ThresholdKind kind = ThresholdKind::kModal, double floor = 0.0,
                               double fallback_horizon = 20.0, double fallback_dt = 1e-3);

/// First sample where |eps| exceeds the threshold, refined by linear
/// interpolation of the margin between the bracketing samples.
DetectionReport detect(const ResidualTrace& res, const ThresholdCurve& threshold,
                       std::optional<double> t_f_hint = std::nullopt);

/// e_hat_i = max(x_hi_i - xhat0_i, xhat0_i - x_lo_i).
Vector initial_error_bound(const Vector& x_lo, const Vector& x_hi, const Vector& xhat0);

}  // namespace tankfdi
