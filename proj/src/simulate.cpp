#include "dgfa/simulate.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dgfa {

double GaussianStream::uniform_open() {
  // 53 random bits -> k / 2^53 in [0, 1), mapped to (0, 1].
  const std::uint64_t bits = engine_() >> 11;
  return 1.0 - static_cast<double>(bits) * 0x1.0p-53;
}

double GaussianStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

void GaussianStream::fill(Eigen::Ref<Vector> out) {
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = next();
}

Trajectory simulate(const TruncatedModel& tm, std::size_t T, std::uint64_t seed, const SimulationOptions& options) {
  if (T == 0) throw Error(ErrorKind::InvalidDimension, "simulation length must be at least 1");
  const FactorDynamics& dyn = tm.dynamics;
  const auto n = static_cast<Eigen::Index>(dyn.n());
  const auto N = tm.C.rows();
  if (tm.C.cols() != n || tm.R.rows() != N) throw Error(ErrorKind::InvalidDimension, "inconsistent model shapes");

  const Matrix state_factor = psd_factor(dyn.Q());
  const Matrix noise_factor = cholesky_factor(tm.R, 1e-10);

  Trajectory traj;
  traj.T = T;
  traj.seed = seed;
  const auto rows = static_cast<Eigen::Index>(T);
  traj.states.resize(rows, n);
  traj.outputs.resize(rows, N);
  traj.state_noise.resize(rows, n);
  traj.output_noise.resize(rows, N);
  traj.common_component.resize(rows, N);

  GaussianStream rng(seed);
  Vector x = Vector::Zero(n);
  Vector zn(n), zN(N);
  if (options.initial == InitialState::stationary) {
    rng.fill(zn);
    x = psd_factor(dyn.sigma()) * zn;
  }
  const Matrix& A = dyn.A();
  for (Eigen::Index t = 0; t < rows; ++t) {
    rng.fill(zn);
    rng.fill(zN);
    const Vector v = state_factor * zn;
    const Vector w = noise_factor.triangularView<Eigen::Lower>() * zN;
    const Vector chi = tm.C * x;
    traj.states.row(t) = x.transpose();
    traj.state_noise.row(t) = v.transpose();
    traj.output_noise.row(t) = w.transpose();
    traj.common_component.row(t) = chi.transpose();
    traj.outputs.row(t) = (chi + w).transpose();
    x = A * x + v;
  }
  return traj;
}

namespace {

void check_series_shapes(const TruncatedModel& tm, const Trajectory& traj) {
  if (traj.outputs.cols() != tm.C.rows() || traj.states.cols() != tm.C.cols()) {
    throw Error(ErrorKind::InvalidDimension, "trajectory does not match the model");
  }
}

}  // namespace

EstimateSeries run_predictor(const TruncatedModel& tm, const PredictorSolution& pred, const Trajectory& traj) {
  check_series_shapes(tm, traj);
  if (pred.K.rows() != tm.C.cols() || pred.K.cols() != tm.C.rows()) {
    throw Error(ErrorKind::InvalidDimension, "predictor gain does not match the model");
  }
  const auto rows = traj.outputs.rows();
  EstimateSeries out;
  out.mode = EstimatorMode::predictor;
  out.estimates.resize(rows, tm.C.cols());
  out.innovations.resize(rows, tm.C.rows());

  const Matrix& A = tm.dynamics.A();
  Vector xp = Vector::Zero(tm.C.cols());
  for (Eigen::Index t = 0; t < rows; ++t) {
    const Vector e = traj.outputs.row(t).transpose() - tm.C * xp;
    out.estimates.row(t) = xp.transpose();
    out.innovations.row(t) = e.transpose();
    xp = A * xp + pred.K * e;
  }
  return out;
}

EstimateSeries run_filter(const TruncatedModel& tm, const PredictorSolution& pred, const FilterSolution& filt,
                          const Trajectory& traj) {
  check_series_shapes(tm, traj);
  if (filt.L.rows() != tm.C.cols() || filt.L.cols() != tm.C.rows() || pred.P.rows() != tm.C.cols()) {
    throw Error(ErrorKind::InvalidDimension, "filter gain does not match the model");
  }
  const auto rows = traj.outputs.rows();
  EstimateSeries out;
  out.mode = EstimatorMode::filter;
  out.estimates.resize(rows, tm.C.cols());
  out.innovations.resize(rows, tm.C.rows());
  out.residual_delta.resize(rows, tm.C.rows());

  const Matrix& A = tm.dynamics.A();
  Vector xf = Vector::Zero(tm.C.cols());
  for (Eigen::Index t = 0; t < rows; ++t) {
    const Vector y = traj.outputs.row(t).transpose();
    const Vector xpred = A * xf;
    xf = xpred + filt.L * (y - tm.C * xpred);
    const Vector e_hat = y - tm.C * xf;
    out.estimates.row(t) = xf.transpose();
    out.innovations.row(t) = e_hat.transpose();
    out.residual_delta.row(t) = e_hat.transpose() - traj.output_noise.row(t);
  }
  return out;
}

Matrix empirical_covariance(const Matrix& samples, std::size_t burn_in) {
  const auto T = static_cast<std::size_t>(samples.rows());
  if (T < burn_in + 2) throw Error(ErrorKind::InsufficientSamples, "need at least two samples after burn-in");
  const auto count = static_cast<Eigen::Index>(T - burn_in);
  const auto block = samples.bottomRows(count);
  const Eigen::RowVectorXd mean = block.colwise().mean();
  const Matrix centred = block.rowwise() - mean;
  return symmetrize(centred.transpose() * centred / static_cast<double>(count));
}

CovarianceEstimate covariance_with_bands(const Matrix& samples, std::size_t burn_in, std::size_t lag,
                                         std::size_t batches) {
  const auto T = static_cast<std::size_t>(samples.rows());
  if (batches < 2) throw Error(ErrorKind::InsufficientSamples, "need at least two batches");
  if (T < burn_in + lag + 2 * batches) {
    throw Error(ErrorKind::InsufficientSamples, "too few samples for the requested batches");
  }
  const std::size_t count = T - burn_in - lag;
  const auto m = samples.cols();
  const Matrix used = samples.bottomRows(static_cast<Eigen::Index>(T - burn_in));
  const Eigen::RowVectorXd mean = used.colwise().mean();
  const Matrix centred = used.rowwise() - mean;

  const std::size_t per_batch = count / batches;
  CovarianceEstimate est;
  est.batches = batches;
  Matrix sum = Matrix::Zero(m, m);
  Matrix sum_sq = Matrix::Zero(m, m);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto start = static_cast<Eigen::Index>(b * per_batch);
    const auto len = static_cast<Eigen::Index>(per_batch);
    const Matrix batch_mean =
        centred.middleRows(start, len).transpose() * centred.middleRows(start + static_cast<Eigen::Index>(lag), len) /
        static_cast<double>(len);
    sum += batch_mean;
    sum_sq += batch_mean.cwiseProduct(batch_mean);
  }
  const double B = static_cast<double>(batches);
  const Matrix batch_avg = sum / B;
  const Matrix var_between = (sum_sq / B - batch_avg.cwiseProduct(batch_avg)) * (B / (B - 1.0));
  est.standard_error = (var_between.cwiseMax(0.0) / B).cwiseSqrt();

  const auto cnt = static_cast<Eigen::Index>(count);
  est.cov = centred.topRows(cnt).transpose() * centred.middleRows(static_cast<Eigen::Index>(lag), cnt) /
            static_cast<double>(count);
  if (lag == 0) est.cov = symmetrize(est.cov);
  return est;
}

double sidak_z(std::size_t comparisons, double familywise_alpha, std::size_t dof) {
  const double m = static_cast<double>(std::max<std::size_t>(comparisons, 1));
  const double per_test = 1.0 - std::pow(1.0 - familywise_alpha, 1.0 / m);
  if (dof > 0) {
    const boost::math::students_t t(static_cast<double>(dof));
    return boost::math::quantile(boost::math::complement(t, per_test / 2.0));
  }
  const boost::math::normal standard;
  return boost::math::quantile(boost::math::complement(standard, per_test / 2.0));
}

double max_standardized_deviation(const CovarianceEstimate& est, const Matrix& theory) {
  if (theory.rows() != est.cov.rows() || theory.cols() != est.cov.cols()) {
    throw Error(ErrorKind::InvalidDimension, "theory and estimate shapes differ");
  }
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theory.cols(); ++j) {
    for (Eigen::Index i = 0; i < theory.rows(); ++i) {
      const double dev = std::abs(est.cov(i, j) - theory(i, j));
      const double se = est.standard_error(i, j);
      worst = std::max(worst, se > 0.0 ? dev / se : (dev > 0.0 ? INFINITY : 0.0));
    }
  }
  return worst;
}

}  // namespace dgfa
