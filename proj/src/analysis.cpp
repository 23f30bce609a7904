#include "tankfdi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace tankfdi {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
using Complex = std::complex<double>;

// Horner evaluation of p and p' at z.
void horner(const std::vector<double>& c, Complex z, Complex& p, Complex& dp) {
  p = c.front();
  dp = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    dp = dp * z + p;
    p = p * z + c[i];
  }
}

double roundoff_bound(const Polynomial& p, Complex z) {
  return 8.0 * static_cast<double>(p.coefficients.size()) * kEps * p.magnitude_at(std::abs(z));
}

std::vector<Complex> quadratic_roots(double b, double c) {
  // s^2 + b s + c, avoiding cancellation in the larger-magnitude root.
  const double disc = b * b - 4.0 * c;
  if (disc >= 0.0) {
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q == 0.0) return {0.0, 0.0};
    return {Complex(q, 0.0), Complex(c / q, 0.0)};
  }
  const double re = -0.5 * b;
  const double im = 0.5 * std::sqrt(-disc);
  return {Complex(re, im), Complex(re, -im)};
}

std::vector<Complex> aberth(const Polynomial& p) {
  const auto& c = p.coefficients;
  const int n = p.degree();
  // Fujiwara bound on root moduli.
  double radius = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double term = std::pow(std::abs(c[static_cast<std::size_t>(k)]), 1.0 / k);
    radius = std::max(radius, k == n ? std::pow(0.5 * std::abs(c.back()), 1.0 / n) : term);
  }
  radius = std::max(2.0 * radius, 1e-3);

  std::vector<Complex> z(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / n + 0.4;
    z[static_cast<std::size_t>(j)] = std::polar(0.5 * radius, theta);
  }
  std::vector<bool> done(z.size(), false);

  constexpr int kMaxIterations = 500;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    bool all_done = true;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (done[i]) continue;
      Complex pv, dpv;
      horner(c, z[i], pv, dpv);
      if (std::abs(pv) <= roundoff_bound(p, z[i])) {
        done[i] = true;
        continue;
      }
      all_done = false;
      const Complex ratio = pv / dpv;
      Complex repulsion = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        if (j != i) repulsion += 1.0 / (z[i] - z[j]);
      }
      const Complex step = ratio / (1.0 - ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      z[i] -= step;
      if (std::abs(step) <= kEps * std::abs(z[i])) done[i] = true;
    }
    if (all_done) return z;
  }
  if (std::all_of(done.begin(), done.end(), [](bool b) { return b; })) return z;

  std::ostringstream msg;
  msg << "root iteration did not converge after " << kMaxIterations << " sweeps; residuals:";
  for (const Complex& zi : z) msg << ' ' << std::abs(p(zi));
  throw NumericalError(msg.str());
}

// Multiple roots come out of the iteration as tight clusters accurate only to
// eps^(1/m). A cluster of size m is replaced by the root of p^(m-1) near its
// centroid when that point is at least as good a root of p.
void polish_clusters(const Polynomial& p, std::vector<Complex>& z) {
  const std::size_t n = z.size();
  std::vector<std::size_t> group(n);
  std::iota(group.begin(), group.end(), 0);
  auto find = [&](std::size_t i) {
    while (group[i] != i) i = group[i] = group[group[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(z[i] - z[j]) <= 1e-4 * std::max(1.0, std::abs(z[i]))) group[find(i)] = find(j);
    }
  }
  for (std::size_t root = 0; root < n; ++root) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (find(i) == root) members.push_back(i);
    }
    if (members.size() < 2) continue;

    Polynomial q = p;
    for (std::size_t k = 1; k < members.size(); ++k) q = q.derivative();
    Complex r = 0.0;
    double worst = 0.0;
    for (std::size_t i : members) {
      r += z[i];
      worst = std::max(worst, std::abs(p(z[i])));
    }
    r /= static_cast<double>(members.size());
    for (int iter = 0; iter < 50; ++iter) {
      Complex qv, dqv;
      horner(q.coefficients, r, qv, dqv);
      if (dqv == 0.0) break;
      const Complex step = qv / dqv;
      r -= step;
      if (std::abs(step) <= kEps * std::max(1.0, std::abs(r))) break;
    }
    if (std::abs(p(r)) <= 10.0 * std::max(worst, roundoff_bound(p, r))) {
      for (std::size_t i : members) z[i] = r;
    }
  }
}

void newton_polish(const Polynomial& p, std::vector<Complex>& z) {
  for (Complex& zi : z) {
    for (int iter = 0; iter < 3; ++iter) {
      Complex pv, dpv;
      horner(p.coefficients, zi, pv, dpv);
      if (dpv == 0.0) break;
      const Complex candidate = zi - pv / dpv;
      if (std::abs(p(candidate)) < std::abs(pv)) {
        zi = candidate;
      } else {
        break;
      }
    }
  }
}

// Real polynomials have conjugate-symmetric roots; a tiny imaginary part is
// dropped when the real axis point is an equally good root.
void snap_real(const Polynomial& p, std::vector<Complex>& z) {
  for (Complex& zi : z) {
    if (zi.imag() == 0.0) continue;
    if (std::abs(zi.imag()) > 1e-6 * std::max(1.0, std::abs(zi))) continue;
    const Complex re(zi.real(), 0.0);
    if (std::abs(p(re)) <= std::max(std::abs(p(zi)), roundoff_bound(p, re))) zi = re;
  }
}

}  // namespace

double Polynomial::operator()(double s) const {
  double acc = 0.0;
  for (double c : coefficients) acc = acc * s + c;
  return acc;
}

std::complex<double> Polynomial::operator()(std::complex<double> s) const {
  Complex acc = 0.0;
  for (double c : coefficients) acc = acc * s + c;
  return acc;
}

Polynomial Polynomial::derivative() const {
  const int n = degree();
  if (n <= 0) return Polynomial{{0.0}};
  Polynomial d;
  d.coefficients.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    d.coefficients[static_cast<std::size_t>(i)] =
        coefficients[static_cast<std::size_t>(i)] * static_cast<double>(n - i);
  }
  return d;
}

Polynomial Polynomial::trimmed(double rel) const {
  double scale = 0.0;
  for (double c : coefficients) scale = std::max(scale, std::abs(c));
  std::size_t first = 0;
  while (first + 1 < coefficients.size() && std::abs(coefficients[first]) <= rel * scale) ++first;
  return Polynomial{{coefficients.begin() + static_cast<std::ptrdiff_t>(first), coefficients.end()}};
}

double Polynomial::magnitude_at(double abs_s) const {
  double acc = 0.0;
  for (double c : coefficients) acc = acc * abs_s + std::abs(c);
  return acc;
}

double Polynomial::norm() const {
  double acc = 0.0;
  for (double c : coefficients) acc += c * c;
  return std::sqrt(acc);
}

Polynomial polynomial_from_roots(const std::vector<std::complex<double>>& roots) {
  std::vector<Complex> c{1.0};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  Polynomial p;
  p.coefficients.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c[i].imag()) > 1e-9 * std::max(1.0, std::abs(c[i]))) {
      throw InvalidParameter("roots are not closed under complex conjugation");
    }
    p.coefficients[i] = c[i].real();
  }
  return p;
}

LeverrierExpansion leverrier(const Matrix& m) {
  if (m.rows() != m.cols()) throw UnsupportedShape("characteristic polynomial needs a square matrix");
  const auto n = m.rows();
  LeverrierExpansion out;
  out.characteristic.coefficients.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.characteristic.coefficients[0] = 1.0;
  if (n == 0) return out;

  Matrix term = Matrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    if (k > 1) {
      term = m * term;
      term.diagonal().array() += out.characteristic.coefficients[static_cast<std::size_t>(k) - 1];
    }
    out.adjugate_terms.push_back(term);
    out.characteristic.coefficients[static_cast<std::size_t>(k)] =
        -(m * term).trace() / static_cast<double>(k);
  }
  return out;
}

Polynomial characteristic_polynomial(const Matrix& m) { return leverrier(m).characteristic; }

std::vector<std::complex<double>> polynomial_roots(const Polynomial& input) {
  Polynomial p = input.trimmed(0.0);
  if (p.coefficients.front() == 0.0) throw InvalidParameter("zero polynomial has no finite roots");
  const double lead = p.coefficients.front();
  for (double& c : p.coefficients) c /= lead;

  std::vector<Complex> roots;
  while (p.degree() > 0 && p.coefficients.back() == 0.0) {
    roots.emplace_back(0.0, 0.0);
    p.coefficients.pop_back();
  }

  const int n = p.degree();
  std::vector<Complex> rest;
  if (n == 1) {
    rest = {Complex(-p.coefficients[1], 0.0)};
  } else if (n == 2) {
    rest = quadratic_roots(p.coefficients[1], p.coefficients[2]);
  } else if (n > 2) {
    rest = aberth(p);
    newton_polish(p, rest);
    polish_clusters(p, rest);
    snap_real(p, rest);
  }
  roots.insert(roots.end(), rest.begin(), rest.end());
  std::sort(roots.begin(), roots.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw UnsupportedShape("eigenvalues need a square matrix");
  if (!m.allFinite()) throw NumericalError("eigenvalues of a non-finite matrix");
  return polynomial_roots(characteristic_polynomial(m));
}

TransferFunction transfer_function(const StateSpace& ss) {
  ss.validate();
  if (ss.inputs() != 1 || ss.outputs() != 1) {
    throw UnsupportedShape("transfer_function supports single-input single-output systems only");
  }
  const LeverrierExpansion ex = leverrier(ss.A);
  TransferFunction tf;
  tf.denominator = ex.characteristic;
  Polynomial num;
  num.coefficients.clear();
  for (const Matrix& term : ex.adjugate_terms) {
    num.coefficients.push_back((ss.C * term * ss.B)(0, 0));
  }
  if (num.coefficients.empty()) num.coefficients.push_back(0.0);
  tf.numerator = num.trimmed();
  return tf;
}

RankReport numerical_rank(const Matrix& m) {
  RankReport report;
  report.matrix = m;
  if (m.size() == 0) return report;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() > 0 ? sv(0) : 0.0;
  report.tolerance =
      static_cast<double>(std::max(m.rows(), m.cols())) * largest * 1e-12;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > report.tolerance) ++report.rank;
  }
  report.full_rank = report.rank == std::min(m.rows(), m.cols()) && report.rank > 0;
  return report;
}

RankReport controllability_matrix(const StateSpace& ss) {
  ss.validate();
  const auto n = ss.states();
  const auto p = ss.inputs();
  Matrix qc(n, n * p);
  Matrix block = ss.B;
  for (Eigen::Index k = 0; k < n; ++k) {
    qc.middleCols(k * p, p) = block;
    block = ss.A * block;
  }
  RankReport r = numerical_rank(qc);
  r.full_rank = r.rank == n;
  return r;
}

Matrix observability_stack(const Matrix& A, const Matrix& C) {
  const auto n = A.rows();
  const auto q = C.rows();
  Matrix qo(n * q, n);
  Matrix block = C;
  for (Eigen::Index k = 0; k < n; ++k) {
    qo.middleRows(k * q, q) = block;
    block = block * A;
  }
  return qo;
}

RankReport observability_matrix(const StateSpace& ss) {
  ss.validate();
  RankReport r = numerical_rank(observability_stack(ss.A, ss.C));
  r.full_rank = r.rank == ss.states();
  return r;
}

bool is_asymptotically_stable(const StateSpace& ss, double tolerance) {
  ss.validate();
  for (const auto& lambda : eigenvalues(ss.A)) {
    if (!(lambda.real() < -tolerance)) return false;
  }
  return true;
}

}  // namespace tankfdi
