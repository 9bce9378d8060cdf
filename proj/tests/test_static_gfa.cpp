#include <gtest/gtest.h>

#include <random>

#include "dgfa/static_gfa.hpp"

using namespace dgfa;

namespace {

StaticModel ones_model(std::size_t N) {
  const auto n = static_cast<Eigen::Index>(N);
  return StaticModel(Matrix::Ones(n, 1), Matrix::Identity(n, n));
}

}  // namespace

TEST(StaticBayes, AveragingFamilyErrorVariance) {
  for (std::size_t N : {1u, 2u, 10u, 100u, 1000u}) {
    const Matrix E = static_error_covariance(ones_model(N));
    EXPECT_NEAR(E(0, 0), 1.0 / (static_cast<double>(N) + 1.0), 1e-12) << N;
  }
}

TEST(StaticBayes, ZeroObservationGivesZeroEstimate) {
  const auto est = bayes_estimate(ones_model(5), Vector::Zero(5));
  EXPECT_TRUE(est.xhat.isZero(0.0));
  EXPECT_TRUE(est.innovation.isZero(0.0));
}

TEST(StaticBayes, OrthonormalLoadingsHalveProjection) {
  Matrix C = Matrix::Zero(4, 2);
  C(0, 0) = 1.0;
  C(3, 1) = 1.0;
  const StaticModel m(C, Matrix::Identity(4, 4));
  const Vector y = (Vector(4) << 2.0, 7.0, -1.0, 4.0).finished();
  const auto est = bayes_estimate(m, y);
  EXPECT_LE((est.xhat - 0.5 * C.transpose() * y).norm(), 1e-15);
  EXPECT_TRUE(est.err_cov.isApprox(0.5 * Matrix::Identity(2, 2), 1e-15));
}

TEST(StaticBayes, EmptyObservation) {
  const StaticModel m(Matrix::Zero(0, 3), Matrix::Zero(0, 0));
  const auto est = bayes_estimate(m, Vector::Zero(0));
  EXPECT_TRUE(est.xhat.isZero(0.0));
  EXPECT_EQ(est.err_cov, Matrix::Identity(3, 3));
  EXPECT_EQ(static_error_covariance(m), Matrix::Identity(3, 3));
}

TEST(StaticBayes, InformationAndCovarianceFormsAgree) {
  std::mt19937 gen(19);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index N = 5 + 7 * trial, n = 1 + trial % 3;
    Matrix C(N, n), B(N, N);
    for (Eigen::Index i = 0; i < C.size(); ++i) C.data()[i] = d(gen);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = d(gen);
    const Matrix S = B * B.transpose() / static_cast<double>(N) + Matrix::Identity(N, N);
    Vector y(N);
    for (Eigen::Index i = 0; i < N; ++i) y(i) = d(gen);
    const StaticModel m(C, S);
    const auto est = bayes_estimate(m, y);
    ASSERT_TRUE(est.cross_check_rel_diff.has_value());
    EXPECT_LE(*est.cross_check_rel_diff, 1e-10);
    // covariance-form error covariance I - C'(CC' + S)^{-1}C
    const Matrix alt = Matrix::Identity(n, n) - C.transpose() * m.output_covariance().llt().solve(C);
    EXPECT_LE((est.err_cov - alt).norm(), 1e-10);
    EXPECT_TRUE(satisfies_error_bound(m, est.err_cov));
    EXPECT_LE(numerical_rank(est.delta_cov), static_cast<std::size_t>(n));
  }
}

TEST(StaticBayes, ErrorBoundWithCorrelatedNoise) {
  const Eigen::Index N = 40;
  Matrix S(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) S(i, j) = std::pow(0.6, std::abs(static_cast<double>(i - j)));
  Matrix C(N, 2);
  for (Eigen::Index i = 0; i < N; ++i) C.row(i) << 1.0, (i % 3 == 0 ? 1.0 : -0.5);
  const StaticModel m(C, S);
  EXPECT_TRUE(satisfies_error_bound(m, static_error_covariance(m)));
  // the bound is not vacuous: a covariance 4 alpha (C'C)^{-1} violates it
  const double alpha = spectral_norm(S);
  const Matrix too_big = 4.0 * alpha * (C.transpose() * C).inverse();
  EXPECT_FALSE(satisfies_error_bound(m, too_big));
}

TEST(StaticBayes, DimensionMismatch) {
  EXPECT_THROW(StaticModel(Matrix::Ones(3, 1), Matrix::Identity(2, 2)), Error);
  EXPECT_THROW(bayes_estimate(ones_model(3), Vector::Zero(4)), Error);
}

TEST(StaticFamilies, RampDeltaVanishesGeometricDoesNot) {
  const auto ramp = static_sweep(static_family(LoadingGenerator::ramp(), NoiseModel::identity()), {10, 50, 200});
  // max diagonal of C E C' is N^2 / (1 + sum k^2) for the ramp
  for (const auto& row : ramp) {
    const double N = static_cast<double>(row.N);
    EXPECT_NEAR(row.delta_max_diag, N * N / (1.0 + N * (N + 1) * (2 * N + 1) / 6.0), 1e-12);
  }
  EXPECT_GT(ramp[0].delta_max_diag, ramp[1].delta_max_diag);
  EXPECT_GT(ramp[1].delta_max_diag, ramp[2].delta_max_diag);

  const auto geo = static_sweep(static_family(LoadingGenerator::geometric(2.0), NoiseModel::identity()), {5, 15, 30});
  for (const auto& row : geo) EXPECT_GE(row.delta_max_diag, 0.3);
  EXPECT_NEAR(geo.back().delta_max_diag, 0.75, 1e-12);
}

TEST(StaticFamilies, SweepReportsNoiseSpectrum) {
  const auto rows = static_sweep(static_family(LoadingGenerator::ones(), NoiseModel::scaled_identity(2.0)), {3});
  EXPECT_DOUBLE_EQ(rows[0].alpha, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].coercivity, 2.0);
  EXPECT_NEAR(rows[0].err_cov_norm, 1.0 / (1.0 + 1.5), 1e-14);
  EXPECT_NEAR(rows[0].delta_lambda_max, 3.0 / 2.5, 1e-13);
}
