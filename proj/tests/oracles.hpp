// Independent reference implementations used only by the tests.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Scaling and squaring with a plain Taylor series.
inline Matrix expm(const Matrix& m) {
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  const Matrix a = m / std::ldexp(1.0, squarings);
  Matrix term = Matrix::Identity(m.rows(), m.cols());
  Matrix sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  while (squarings-- > 0) sum = sum * sum;
  return sum;
}

// Ackermann's formula for the observer gain of a single-output pair.
inline Vector ackermann(const Matrix& A, const Matrix& C, const std::vector<double>& monic) {
  const Eigen::Index n = A.rows();
  Matrix O(n, n);
  Matrix row = C;
  for (Eigen::Index i = 0; i < n; ++i) {
    O.row(i) = row;
    row = row * A;
  }
  Matrix pA = Matrix::Zero(n, n);
  for (double c : monic) pA = pA * A + c * Matrix::Identity(n, n);
  Vector en = Vector::Zero(n);
  en(n - 1) = 1.0;
  return pA * O.inverse() * en;
}

struct KfStep {
  Vector x;
  Matrix P;
};

// Textbook covariance-form Kalman filter: predict then update per sample.
inline std::vector<KfStep> kalman(const Matrix& A, const Matrix& B, const Matrix& H,
                                  const Matrix& Q, const Matrix& R, Vector x, Matrix P,
                                  const std::vector<Vector>& u, const std::vector<Vector>& y) {
  std::vector<KfStep> out;
  const Matrix I = Matrix::Identity(A.rows(), A.rows());
  for (std::size_t k = 0; k < y.size(); ++k) {
    x = A * x + B * u[k];
    P = A * P * A.transpose() + B * Q * B.transpose();
    const Matrix S = H * P * H.transpose() + R;
    const Matrix K = P * H.transpose() * S.inverse();
    x = x + K * (y[k] - H * x);
    P = (I - K * H) * P;
    P = 0.5 * (P + P.transpose());
    out.push_back({x, P});
  }
  return out;
}

struct RandomModel {
  Matrix A, B, H, Q, R;
};

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor) {
  const Matrix g = random_matrix(rng, n, n, 1.0);
  return g * g.transpose() + floor * Matrix::Identity(n, n);
}

// Random 3-state, 1-input, 1-output model with spectral radius below one.
inline RandomModel random_model(std::mt19937_64& rng) {
  RandomModel m;
  Matrix A = random_matrix(rng, 3, 3, 0.5);
  const double rho = Eigen::EigenSolver<Matrix>(A).eigenvalues().cwiseAbs().maxCoeff();
  if (rho > 0.95) A *= 0.95 / rho;
  m.A = A;
  m.B = random_matrix(rng, 3, 1, 1.0);
  m.H = random_matrix(rng, 1, 3, 1.0);
  m.Q = random_spd(rng, 1, 0.1);
  m.R = random_spd(rng, 1, 0.1);
  return m;
}

inline std::vector<Vector> random_sequence(std::mt19937_64& rng, std::size_t n, Eigen::Index dim) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_matrix(rng, dim, 1, 1.0));
  return out;
}

}  // namespace oracle
