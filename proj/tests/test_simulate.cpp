#include <gtest/gtest.h>

#include "dgfa/experiment.hpp"
#include "dgfa/simulate.hpp"

using namespace dgfa;

TEST(Rng, SameSeedSameStream) {
  GaussianStream a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.next();
    EXPECT_EQ(x, b.next());
    differs = differs || x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, MomentsRoughlyStandard) {
  GaussianStream g(1);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = g.next();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
}

TEST(Simulate, DeterministicBySeed) {
  const auto tm = build_pollution_model(8);
  const auto t1 = simulate(tm, 500, 9);
  const auto t2 = simulate(tm, 500, 9);
  const auto t3 = simulate(tm, 500, 10);
  EXPECT_EQ(t1.outputs, t2.outputs);
  EXPECT_EQ(t1.states, t2.states);
  EXPECT_NE(t1.outputs, t3.outputs);
}

TEST(Simulate, OutputDecomposition) {
  const auto tm = build_pollution_model(8);
  const auto tr = simulate(tm, 200, 3);
  EXPECT_LE((tr.outputs - tr.common_component - tr.output_noise).norm(), 1e-12);
  EXPECT_LE((tr.common_component - tr.states * tm.C.transpose()).norm(), 1e-12);
  const Matrix& A = tm.dynamics.A();
  const Matrix next = tr.states.topRows(199) * A.transpose() + tr.state_noise.topRows(199);
  EXPECT_LE((next - tr.states.bottomRows(199)).norm(), 1e-12);
}

TEST(Simulate, ZeroDynamicsAndNoiseFreeState) {
  // A = 0, Q = 0: the state is identically zero and y = w.
  const FactorDynamics dyn(Matrix::Zero(2, 2), Matrix::Zero(2, 2));
  const auto tm = truncate(dyn, pollution_loadings(), pollution_noise(), 4);
  SimulationOptions opt;
  opt.initial = InitialState::zero;
  const auto tr = simulate(tm, 100, 1, opt);
  EXPECT_TRUE(tr.states.isZero(0.0));
  EXPECT_EQ(tr.outputs, tr.output_noise);

  SolveOptions so;
  so.allow_unreachable = true;
  const auto pred = predictor_solution(tm, so);
  const auto filt = filter_solution(tm, pred);
  const auto ps = run_predictor(tm, pred, tr);
  const auto fs = run_filter(tm, pred, filt, tr);
  EXPECT_TRUE(ps.estimates.isZero(0.0));
  EXPECT_TRUE(fs.estimates.isZero(0.0));
  EXPECT_TRUE(fs.residual_delta.isZero(0.0));
}

TEST(Simulate, DrawOrder) {
  // With zero initial state the first n normals are v(0), the next N are w(0).
  const auto tm = truncate(FactorDynamics(0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
                           pollution_loadings(), NoiseModel::identity(), 4);
  SimulationOptions opt;
  opt.initial = InitialState::zero;
  const auto tr = simulate(tm, 2, 77, opt);
  GaussianStream g(77);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(tr.state_noise(0, i), g.next());
  for (int i = 0; i < 4; ++i) EXPECT_EQ(tr.output_noise(0, i), g.next());
  for (int i = 0; i < 2; ++i) EXPECT_EQ(tr.state_noise(1, i), g.next());
}

TEST(EmpiricalCovariance, SimpleCases) {
  EXPECT_TRUE(empirical_covariance(Matrix::Constant(10, 2, 3.0)).isZero(0.0));
  Matrix alt(4, 1);
  alt << 1, -1, 1, -1;
  EXPECT_DOUBLE_EQ(empirical_covariance(alt)(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(empirical_covariance(alt, 2)(0, 0), 1.0);
  EXPECT_THROW(empirical_covariance(alt, 3), Error);

  GaussianStream g(5);
  Matrix iid(50000, 3);
  for (Eigen::Index i = 0; i < iid.size(); ++i) iid.data()[i] = g.next();
  const auto est = covariance_with_bands(iid, 0, 0, 20);
  EXPECT_LE(max_standardized_deviation(est, Matrix::Identity(3, 3)), sidak_z(6, 0.0027, 19));
  const auto lag1 = covariance_with_bands(iid, 0, 1, 20);
  EXPECT_LE(max_standardized_deviation(lag1, Matrix::Zero(3, 3)), sidak_z(9, 0.0027, 19));
}

TEST(Sidak, Quantiles) {
  EXPECT_NEAR(sidak_z(1), 3.0, 1e-3);
  EXPECT_GT(sidak_z(100), sidak_z(10));
  EXPECT_GT(sidak_z(1, 0.0027, 19), sidak_z(1));
  EXPECT_NEAR(sidak_z(1, 0.05, 19), 2.093, 1e-3);
}

TEST(MonteCarlo, FilterAndPredictorMatchTheory) {
  const auto tm = build_pollution_model(16);
  const auto pred = predictor_solution(tm);
  const auto filt = filter_solution(tm, pred);
  const auto tr = simulate(tm, 40000, 2024);
  const auto ps = run_predictor(tm, pred, tr);
  const auto fs = run_filter(tm, pred, filt, tr);
  const std::size_t burn = 500;

  const auto perr = covariance_with_bands(tr.states - ps.estimates, burn);
  const auto ferr = covariance_with_bands(tr.states - fs.estimates, burn);
  EXPECT_LE(max_standardized_deviation(perr, pred.P), sidak_z(3, 0.0027, 19));
  EXPECT_LE(max_standardized_deviation(ferr, filt.Pi), sidak_z(3, 0.0027, 19));

  // predictor innovations are white with covariance Lambda
  const auto innov = covariance_with_bands(ps.innovations, burn);
  EXPECT_LE(max_standardized_deviation(innov, pred.Lambda), sidak_z(16 * 17 / 2, 0.0027, 19));
  const auto lag1 = covariance_with_bands(ps.innovations, burn, 1);
  EXPECT_LE(max_standardized_deviation(lag1, Matrix::Zero(16, 16)), sidak_z(256, 0.0027, 19));

  // filter innovations have covariance R Lambda^{-1} R
  const auto finnov = covariance_with_bands(fs.innovations, burn);
  EXPECT_LE(max_standardized_deviation(finnov, filt.Lambda_hat), sidak_z(16 * 17 / 2, 0.0027, 19));
}

TEST(MonteCarlo, InnovationTransformOnSimulatedData) {
  const auto tm = build_pollution_model(8);
  const auto pred = predictor_solution(tm);
  const auto filt = filter_solution(tm, pred);
  const auto tr = simulate(tm, 300, 8);
  const auto ps = run_predictor(tm, pred, tr);
  const auto fs = run_filter(tm, pred, filt, tr);
  // run both recursions from the same start: x(0|-1) = 0 = A x(-1)
  for (Eigen::Index t = 0; t < 300; ++t) {
    const Vector e = ps.innovations.row(t).transpose();
    const Vector e_hat = fs.innovations.row(t).transpose();
    EXPECT_LE((innovation_transform(tm.C, filt.L, e, TransformDirection::predictor_to_filter) - e_hat).norm(),
              1e-10 * (1.0 + e.norm()));
    EXPECT_LE((innovation_transform(tm.C, filt.L, e_hat, TransformDirection::filter_to_predictor) - e).norm(),
              1e-10 * (1.0 + e.norm()));
  }
}

TEST(Simulate, RejectsBadArguments) {
  const auto tm = build_pollution_model(4);
  EXPECT_THROW(simulate(tm, 0, 1), Error);
  const auto tr = simulate(tm, 30, 1);
  EXPECT_THROW(covariance_with_bands(tr.outputs, 0, 0, 20), Error);
}
