#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "dgfa/kalman.hpp"
#include "dgfa/linalg.hpp"
#include "dgfa/model.hpp"

namespace dgfa {

/// Standard normal stream: std::mt19937_64 for the bits, 53-bit uniforms, and
/// the Box-Muller transform (cos branch first, sin branch cached). Both pieces
/// are fully specified, so a seed reproduces the same draws on any platform
/// with an IEEE-754 libm.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next();
  void fill(Eigen::Ref<Vector> out);

 private:
  double uniform_open();  // (0, 1]

  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

enum class InitialState { stationary, zero };

struct SimulationOptions {
  InitialState initial = InitialState::stationary;
};

/// Sample path of a truncated model. Row t of each matrix is time t.
struct Trajectory {
  std::size_t T = 0;
  Matrix states;            // x(t), T x n
  Matrix outputs;           // y(t) = C x(t) + w(t), T x N
  Matrix state_noise;       // v(t), T x n; x(t+1) = A x(t) + v(t)
  Matrix output_noise;      // w(t), T x N
  Matrix common_component;  // C x(t), T x N
  std::uint64_t seed = 0;
};

enum class EstimatorMode { predictor, filter };

struct EstimateSeries {
  EstimatorMode mode = EstimatorMode::predictor;
  Matrix estimates;       // x(t|t-1) or x(t|t), T x n
  Matrix innovations;     // e(t) or e_hat(t), T x N
  Matrix residual_delta;  // e_hat(t) - w(t), filter mode only (empty otherwise)
};

/// Draw order: x(0) (n normals, stationary mode only), then per t the n
/// entries of v(t) followed by the N entries of w(t).
Trajectory simulate(const TruncatedModel& tm, std::size_t T, std::uint64_t seed, const SimulationOptions& options = {});

/// One-step predictor from x(0|-1) = 0.
EstimateSeries run_predictor(const TruncatedModel& tm, const PredictorSolution& pred, const Trajectory& traj);

/// Pure filter from x(-1) = 0: x(t) = A x(t-1) + L (y(t) - C A x(t-1)).
EstimateSeries run_filter(const TruncatedModel& tm, const PredictorSolution& pred, const FilterSolution& filt,
                          const Trajectory& traj);

/// Mean-removed sample covariance over rows [burn_in, T), normalised by the
/// number of rows used.
Matrix empirical_covariance(const Matrix& samples, std::size_t burn_in = 0);

/// Sample (cross-)covariance with batch-means standard errors.
struct CovarianceEstimate {
  Matrix cov;
  Matrix standard_error;
  std::size_t batches = 0;
};

/// Cov(x(t), x(t+lag)) over rows [burn_in, T) with standard errors from
/// `batches` non-overlapping batch means of the centred products.
CovarianceEstimate covariance_with_bands(const Matrix& samples, std::size_t burn_in = 0, std::size_t lag = 0,
                                         std::size_t batches = 20);

/// Per-comparison normal quantile that keeps the family-wise two-sided
/// false-alarm rate at `familywise_alpha` over `comparisons` tests (Sidak).
/// With one comparison and the default alpha this is ~3.0. A nonzero `dof`
/// swaps the normal for a Student t, which is the right reference when the
/// standard errors come from `dof + 1` batch means.
double sidak_z(std::size_t comparisons, double familywise_alpha = 0.0027, std::size_t dof = 0);

/// Largest |emp - theory| / stderr over all entries.
double max_standardized_deviation(const CovarianceEstimate& est, const Matrix& theory);

}  // namespace dgfa
