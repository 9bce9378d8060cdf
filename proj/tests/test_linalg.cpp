#include <gtest/gtest.h>

#include <random>

#include "dgfa/linalg.hpp"
#include "oracles.hpp"

using namespace dgfa;

namespace {

Matrix random_stable(std::mt19937& gen, Eigen::Index n, double radius) {
  std::normal_distribution<double> d;
  Matrix A(n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = d(gen);
  return A * (radius / spectral_radius(A));
}

Matrix random_psd(std::mt19937& gen, Eigen::Index n, Eigen::Index rank) {
  std::normal_distribution<double> d;
  Matrix B(n, rank);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = d(gen);
  return B * B.transpose();
}

Matrix random_matrix(std::mt19937& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> d;
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = d(gen);
  return M;
}

}  // namespace

TEST(Stein, ZeroDynamicsReturnsQ) {
  const Matrix Q = (Matrix(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
  const Matrix S = solve_stein(Matrix::Zero(2, 2), Q);
  EXPECT_TRUE(S.isApprox(Q, 1e-15));
}

TEST(Stein, ScalarGeometricSeries) {
  const Matrix S = solve_stein(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0));
  EXPECT_NEAR(S(0, 0), 4.0 / 3.0, 1e-14);
}

TEST(Stein, PollutionModelMatchesKroneckerOracle) {
  const Matrix A = oracle::pollution_A();
  const Matrix Q = oracle::pollution_Q();
  const Matrix S = solve_stein(A, Q);
  EXPECT_LE((S - A * S * A.transpose() - Q).norm(), 1e-10);
  EXPECT_LE((S - oracle::kron_stein(A, Q)).norm(), 1e-10 * S.norm());
  EXPECT_TRUE(is_psd(S));
}

TEST(Stein, RejectsUnstableA) {
  const Matrix A = Matrix::Identity(2, 2);
  try {
    solve_stein(A, Matrix::Identity(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotStable);
  }
}

TEST(Stein, IterationBudgetExhausted) {
  Tolerances tol;
  tol.max_iter = 1;
  const Matrix A = Matrix::Constant(1, 1, 0.999);
  try {
    solve_stein(A, Matrix::Identity(1, 1), tol);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonConvergence);
  }
}

TEST(Stein, RandomModelsResidualProperty) {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    const Matrix A = random_stable(gen, n, 0.3 + 0.65 * (trial % 5) / 4.0);
    const Matrix Q = random_psd(gen, n, 1 + trial % n);
    const Matrix S = solve_stein(A, Q);
    EXPECT_LE(stein_residual(A, Q, S), 1e-9) << "trial " << trial;
    EXPECT_TRUE(is_psd(S));
    EXPECT_TRUE(S.isApprox(S.transpose(), 0.0));
    EXPECT_LE((S - oracle::kron_stein(A, Q)).norm(), 1e-8 * (1.0 + S.norm()));
  }
}

TEST(Dare, ZeroLoadingsEqualStein) {
  const Matrix A = oracle::pollution_A();
  const Matrix Q = oracle::pollution_Q();
  const Matrix P = solve_dare(A, Matrix::Zero(3, 2), Q, Matrix::Identity(3, 3));
  EXPECT_EQ(P, solve_stein(A, Q));
}

TEST(Dare, ScalarQuadraticRoot) {
  const double expected = oracle::scalar_dare(0.5, 1.0, 1.0, 1.0);
  EXPECT_NEAR(expected, (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0, 1e-15);
  const Matrix P = solve_dare(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                              Matrix::Ones(1, 1));
  EXPECT_NEAR(P(0, 0), expected, 1e-12);
  EXPECT_NEAR(P(0, 0), 1.13278, 5e-6);
}

TEST(Dare, PollutionN4DominatesQAndMatchesRecursionOracle) {
  const Matrix A = oracle::pollution_A();
  const Matrix Q = oracle::pollution_Q();
  Matrix C(4, 2);
  C << 1, 0, 0, 1, 1, 0, 0, 1;
  const Matrix R = Matrix::Identity(4, 4);
  const DareResult res = solve_dare_detailed(A, C, Q, R);
  EXPECT_LE(res.relative_residual, 1e-9);
  EXPECT_TRUE(psd_leq(Q, res.P));

  const auto iterates = oracle::riccati_iterates(A, C, Q, R, 100000);
  EXPECT_LE((iterates.back() - res.P).norm(), 1e-9 * res.P.norm());
  for (std::size_t k = 1; k < iterates.size(); ++k) {
    EXPECT_TRUE(psd_leq(iterates[k - 1], iterates[k], 1e-12)) << "iterate " << k;
  }
}

TEST(Dare, RandomModelsAgainstRecursionOracle) {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 15; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    const Eigen::Index N = 1 + (trial * 3) % 9;
    const Matrix A = random_stable(gen, n, 0.5 + 0.4 * (trial % 3) / 2.0);
    const Matrix Q = random_psd(gen, n, n) + 0.1 * Matrix::Identity(n, n);
    const Matrix C = random_matrix(gen, N, n);
    const Matrix R = random_psd(gen, N, N) + 0.5 * Matrix::Identity(N, N);
    const Matrix P = solve_dare(A, C, Q, R);
    EXPECT_LE(dare_residual(A, C, Q, R, P), 1e-9) << trial;
    const auto it = oracle::riccati_iterates(A, C, Q, R, 100000);
    EXPECT_LE((it.back() - P).norm(), 1e-9 * (1.0 + P.norm())) << trial;
    EXPECT_TRUE(psd_leq(Q, P));
  }
}

TEST(Dare, RejectsBadInputs) {
  const Matrix A = Matrix::Constant(1, 1, 1.5);
  EXPECT_THROW(solve_dare(A, Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1)), Error);
  try {
    solve_dare(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1), -Matrix::Ones(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPD);
  }
  EXPECT_THROW(solve_dare(Matrix::Constant(1, 1, 0.5), Matrix::Ones(2, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1)),
               Error);
}

TEST(Spectral, Identity) {
  const auto s = spectral_summary(Matrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(s.lambda_min, 1.0);
  EXPECT_DOUBLE_EQ(s.lambda_max, 1.0);
  EXPECT_DOUBLE_EQ(s.spectral_radius, 1.0);
  EXPECT_TRUE(s.is_psd);
}

TEST(Spectral, Diagonal) {
  const auto s = spectral_summary(Vector::LinSpaced(2, 1.0, 4.0).asDiagonal().toDenseMatrix());
  EXPECT_NEAR(s.lambda_min, 1.0, 1e-15);
  EXPECT_NEAR(s.lambda_max, 4.0, 1e-15);
}

TEST(Spectral, PollutionAComplexPair) {
  const Matrix A = oracle::pollution_A();
  const double det = A.determinant();
  EXPECT_NEAR(det, 0.75838, 1e-5);
  const auto s = spectral_summary(A, false);
  EXPECT_NEAR(s.spectral_radius, std::sqrt(det), 1e-12);
  EXPECT_NEAR(s.spectral_radius, 0.8709, 1e-4);
}

TEST(Spectral, RejectsNonFinite) {
  Matrix M = Matrix::Identity(2, 2);
  M(0, 1) = NAN;
  try {
    spectral_summary(M);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
}

TEST(Spectral, SymmetricRadiusProperty) {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix B = random_matrix(gen, 5, 5);
    const Matrix S = B + B.transpose();
    const auto s = spectral_summary(S);
    EXPECT_LE(s.lambda_min, s.lambda_max);
    EXPECT_NEAR(s.spectral_radius, std::max(std::abs(s.lambda_min), std::abs(s.lambda_max)), 1e-12);
    EXPECT_NEAR(s.spectral_radius, spectral_radius(S), 1e-10 * (1.0 + s.spectral_radius));
  }
}

TEST(Projection, InSpanGivesZero) {
  const Vector a = (Vector(4) << 1, 0, 1, 0).finished();
  const Vector b = (Vector(4) << 0, 1, 0, 1).finished();
  const auto r = projection_residual(2.0 * a - 3.0 * b, {a, b});
  EXPECT_NEAR(r.norm, 0.0, 1e-14);
}

TEST(Projection, OrthogonalIsUnchanged) {
  const Vector a = (Vector(4) << 1, 0, 1, 0).finished();
  const Vector v = (Vector(4) << 0, 2, 0, -1).finished();
  const auto r = projection_residual(v, {a});
  EXPECT_LE((r.residual - v).norm(), 1e-15);
}

TEST(Projection, HandExample) {
  const Vector v = Vector::Ones(4);
  const Vector a = (Vector(4) << 1, 0, 1, 0).finished();
  const auto r = projection_residual(v, {a});
  EXPECT_LE((r.residual - (Vector(4) << 0, 1, 0, 1).finished()).norm(), 1e-15);
  EXPECT_NEAR(r.norm, std::sqrt(2.0), 1e-15);
}

TEST(Projection, RankDeficientBasisAndOrthogonalityProperty) {
  std::mt19937 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix B = random_matrix(gen, 12, 3);
    std::vector<Vector> basis{B.col(0), B.col(1), B.col(2), B.col(0) + 2.0 * B.col(1)};
    const Vector v = random_matrix(gen, 12, 1);
    const auto r = projection_residual(v, basis);
    for (const auto& b : basis) EXPECT_LE(std::abs(r.residual.dot(b)), 1e-10 * v.norm() * b.norm());
    // Least-squares oracle on the full-rank part.
    const Vector coef = B.colPivHouseholderQr().solve(v);
    EXPECT_NEAR(r.norm, (v - B * coef).norm(), 1e-10);
  }
}

TEST(Factorisation, PsdFactorHandlesSingular) {
  const Matrix Z = Matrix::Zero(2, 2);
  const Matrix F = psd_factor(Z);
  EXPECT_TRUE((F * F.transpose()).isZero(0.0));
  const Matrix Q = oracle::pollution_Q();
  const Matrix G = psd_factor(Q);
  EXPECT_TRUE((G * G.transpose()).isApprox(Q, 1e-14));
  EXPECT_THROW(psd_factor(-Matrix::Identity(2, 2)), Error);
}

TEST(Factorisation, CholeskyJitterLimit) {
  Matrix R = Matrix::Ones(2, 2);  // singular PSD, rescued by jitter
  EXPECT_NO_THROW(cholesky_factor(R));
  EXPECT_THROW(cholesky_factor(-Matrix::Identity(2, 2)), Error);
}

TEST(Order, PsdLeq) {
  const Matrix I = Matrix::Identity(2, 2);
  EXPECT_TRUE(psd_leq(I, 2.0 * I));
  EXPECT_FALSE(psd_leq(2.0 * I, I));
  EXPECT_EQ(numerical_rank(Matrix::Ones(3, 3)), 1u);
}
