#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "dgfa/linalg.hpp"
#include "dgfa/model.hpp"

namespace dgfa {

/// Static factor model y_N = C_N x + w_N with Cov x = I and Cov w_N = sigma_tilde.
class StaticModel {
 public:
  StaticModel(Matrix C, Matrix sigma_tilde);

  const Matrix& C() const { return C_; }
  const Matrix& sigma_tilde() const { return sigma_tilde_; }
  std::size_t N() const { return static_cast<std::size_t>(C_.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(C_.cols()); }

  /// C C' + sigma_tilde, the covariance of y_N.
  Matrix output_covariance() const;

 private:
  Matrix C_;
  Matrix sigma_tilde_;
};

struct StaticEstimate {
  Vector xhat;
  Matrix err_cov;
  Matrix delta_cov;
  Vector innovation;
  /// Relative gap between the information-form and covariance-form estimates;
  /// only computed for N <= kCrossCheckLimit.
  std::optional<double> cross_check_rel_diff;
};

inline constexpr std::size_t kCrossCheckLimit = 512;

/// Linear Bayes estimate of x given y, computed in information form
/// (I + C' S^{-1} C)^{-1} C' S^{-1} y and cross-checked against
/// C' (C C' + S)^{-1} y for moderate N.
StaticEstimate bayes_estimate(const StaticModel& model, const Vector& y);

/// (I + C' S^{-1} C)^{-1}. Identity when N = 0.
Matrix static_error_covariance(const StaticModel& model);

/// Checks err_cov <= alpha (C'C)^{-1} in PSD order with alpha = lambda_max(S).
/// Vacuously true when C'C is singular.
bool satisfies_error_bound(const StaticModel& model, const Matrix& err_cov);

/// C (I + C' S^{-1} C)^{-1} C', the covariance of delta_N = e_N - w_N.
Matrix static_delta_covariance(const StaticModel& model);

struct StaticSweepRow {
  std::size_t N = 0;
  double err_cov_norm = 0.0;
  double delta_max_diag = 0.0;
  double delta_lambda_max = 0.0;
  /// lambda_max(S) and lambda_min(S) of the noise at this N.
  double alpha = 0.0;
  double coercivity = 0.0;
};

using StaticFamily = std::function<StaticModel(std::size_t)>;

/// Family N -> (C_N, R_N) from the nested generators.
StaticFamily static_family(const LoadingGenerator& loadings, const NoiseModel& noise);

std::vector<StaticSweepRow> static_sweep(const StaticFamily& family, const std::vector<std::size_t>& N_list);

}  // namespace dgfa
