#pragma once

#include <complex>
#include <vector>

#include "tankfdi/common.hpp"
#include "tankfdi/model.hpp"

namespace tankfdi {

/// Real polynomial, coefficients ordered from the highest degree down.
struct Polynomial {
  std::vector<double> coefficients{0.0};

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  double operator()(double s) const;
  std::complex<double> operator()(std::complex<double> s) const;
  Polynomial derivative() const;
  /// Drops leading coefficients with |c| <= rel * max|c|.
  Polynomial trimmed(double rel = 1e-14) const;
  /// Sum of |c_i| |s|^i, the roundoff scale of evaluation at s.
  double magnitude_at(double abs_s) const;
  double norm() const;
};

/// Monic polynomial with the given roots; roots must be closed under conjugation.
Polynomial polynomial_from_roots(const std::vector<std::complex<double>>& roots);

struct TransferFunction {
  Polynomial numerator;
  Polynomial denominator;

  double operator()(double s) const { return numerator(s) / denominator(s); }
};

struct RankReport {
  Matrix matrix;
  int rank = 0;
  bool full_rank = false;
  double tolerance = 0.0;
};

/// det(sI - M) via the Faddeev-LeVerrier recursion.
Polynomial characteristic_polynomial(const Matrix& m);

/// Faddeev-LeVerrier output: characteristic coefficients plus the auxiliary
/// matrices N_1..N_n with adj(sI - M) = sum_k N_k s^(n-k).
struct LeverrierExpansion {
  Polynomial characteristic;
  std::vector<Matrix> adjugate_terms;
};
LeverrierExpansion leverrier(const Matrix& m);

/// Roots of a real polynomial (Aberth-Ehrlich iteration with cluster polishing).
/// Sorted by ascending real part, then imaginary part.
std::vector<std::complex<double>> polynomial_roots(const Polynomial& p);

/// Eigenvalues of a small dense matrix as roots of its characteristic polynomial.
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

/// SISO transfer function C adj(sI - A) B / det(sI - A). No pole-zero cancellation.
TransferFunction transfer_function(const StateSpace& ss);

RankReport numerical_rank(const Matrix& m);
RankReport controllability_matrix(const StateSpace& ss);
RankReport observability_matrix(const StateSpace& ss);
/// Observability matrix of an arbitrary (A, C) pair.
Matrix observability_stack(const Matrix& A, const Matrix& C);

bool is_asymptotically_stable(const StateSpace& ss, double tolerance = 1e-12);

}  // namespace tankfdi
