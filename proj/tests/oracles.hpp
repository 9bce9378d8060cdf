#pragma once

// Independent reference computations used only by the tests. None of these
// go through the library's solver paths.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// vec(S) = (I - A kron A)^{-1} vec(Q), dense LU.
inline Matrix kron_stein(const Matrix& A, const Matrix& Q) {
  const auto n = A.rows();
  Matrix K(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = A(i, j) * A;
  const Matrix lhs = Matrix::Identity(n * n, n * n) - K;
  const Vector q = Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector s = lhs.partialPivLu().solve(q);
  return Eigen::Map<const Matrix>(s.data(), n, n);
}

// Riccati recursion in covariance form, N x N innovation inverted by LU.
// Returns every iterate so monotonicity can be inspected.
inline std::vector<Matrix> riccati_iterates(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R,
                                            int max_steps, double rel_stop = 1e-14) {
  std::vector<Matrix> out{Q};
  Matrix P = Q;
  for (int k = 0; k < max_steps; ++k) {
    const Matrix S = C * P * C.transpose() + R;
    const Matrix gain = P * C.transpose() * S.partialPivLu().inverse();
    Matrix next = A * (P - gain * C * P) * A.transpose() + Q;
    next = 0.5 * (next + next.transpose());
    const double change = (next - P).norm();
    P = next;
    out.push_back(P);
    if (change <= rel_stop * P.norm()) break;
  }
  return out;
}

// Positive root of c^2 P^2 + (r (1 - a^2) - q c^2) P - q r = 0, the scalar
// filtering Riccati equation P = a^2 P r / (c^2 P + r) + q.
inline double scalar_dare(double a, double c, double q, double r) {
  const double b = r * (1.0 - a * a) - q * c * c;
  return (-b + std::sqrt(b * b + 4.0 * c * c * q * r)) / (2.0 * c * c);
}

inline Matrix pollution_A() {
  Matrix A(2, 2);
  A << 0.9692, -0.0442, 0.2582, 0.7707;
  return A;
}

inline Matrix pollution_Q() {
  Matrix Q(2, 2);
  Q << 0.1682, 0.2806, 0.2806, 0.7531;
  return Q;
}

// Explicit simulation of the square-coupled noise recursion: the propagation
// matrix M with w = M n, built by literally applying
// w_l = (coupling / group) * sum_h w_{l-1,h} + n_l square by square.
inline Matrix square_recursion_propagation(std::size_t N, std::size_t group, double coupling) {
  const auto n = static_cast<Eigen::Index>(N);
  const auto g = static_cast<Eigen::Index>(group);
  Matrix M = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index l = i / g;
    M(i, i) = 1.0;
    if (l > 0) {
      for (Eigen::Index h = (l - 1) * g; h < l * g; ++h) M.row(i) += (coupling / static_cast<double>(group)) * M.row(h);
    }
  }
  return M;
}

}  // namespace oracle
