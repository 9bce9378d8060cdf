#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dgfa/linalg.hpp"
#include "dgfa/model.hpp"

namespace dgfa {

struct SolveOptions {
  Tolerances tol{};
  /// Skip the reachability precondition (degenerate plumbing checks only).
  bool allow_unreachable = false;
};

/// Steady-state one-step predictor  x(t+1|t) = A x(t|t-1) + K e(t).
struct PredictorSolution {
  Matrix P;        // prediction error covariance, stabilizing Riccati solution
  Matrix Lambda;   // innovation covariance C P C' + R
  Matrix K;        // A P C' Lambda^{-1}
  Matrix Q_tilde;  // K Lambda K' = A P A' - P + Q
  std::size_t iterations = 0;
  double riccati_residual = 0.0;
  double closed_loop_radius = 0.0;
};

/// Steady-state pure filter  x(t) = A x(t-1) + L e(t).
struct FilterSolution {
  Matrix Pi;          // filter error covariance (P^{-1} + C' R^{-1} C)^{-1}
  Matrix L;           // P C' Lambda^{-1}
  Matrix Lambda_hat;  // filter innovation covariance R Lambda^{-1} R
};

PredictorSolution predictor_solution(const TruncatedModel& tm, const SolveOptions& options = {});

FilterSolution filter_solution(const TruncatedModel& tm, const PredictorSolution& pred);

enum class TransformDirection { filter_to_predictor, predictor_to_filter };

/// predictor_to_filter: e_hat = (I - C L) e.
/// filter_to_predictor: e = (I - C L)^{-1} e_hat, evaluated as
/// e_hat + C (I - L C)^{-1} L e_hat so only an n x n system is solved.
Vector innovation_transform(const Matrix& C, const Matrix& L, const Vector& vec, TransformDirection direction);

/// Relative errors of the algebraic identities tying the two solutions together.
struct IdentityCheck {
  double gain_identity = 0.0;         // I - C L = R Lambda^{-1}
  double lambda_hat_forms = 0.0;      // R Lambda^{-1} R = (I - CL) Lambda (I - CL)'
  double q_tilde_identity = 0.0;      // K Lambda K' = A P A' - P + Q
  double pi_forms = 0.0;              // (P^{-1} + C'R^{-1}C)^{-1} = P - P C' Lambda^{-1} C P
  double max() const;
};

IdentityCheck check_identities(const TruncatedModel& tm, const PredictorSolution& pred, const FilterSolution& filt);

struct PredictorRow {
  std::size_t N = 0;
  double norm_P_minus_Q = 0.0;
  double lambda_max_CPCt = 0.0;
  double norm_Qtilde_minus_AQAt = 0.0;
  double norm_Sigma_pred_minus_inf = 0.0;
  /// ||A||^2 alpha / lambda_min(C'C), a priori bound on ||P - Q||.
  double bound_P_minus_Q = 0.0;
  double lambda_max_Lambda = 0.0;
  double trace_P = 0.0;
  double norm_P = 0.0;
  /// Top-n eigenvalues of C P C', descending.
  std::vector<double> top_eigs_CPCt;
  double riccati_residual = 0.0;
  double closed_loop_radius = 0.0;
};

struct FilterRow {
  std::size_t N = 0;
  double norm_Pi = 0.0;
  double trace_Pi = 0.0;
  double norm_Lambda_hat = 0.0;
  double delta_hat_euclid = 0.0;  // sqrt(tr(C Pi C'))
  double delta_hat_inf = 0.0;     // max_i sqrt([C Pi C']_ii)
  double norm_R = 0.0;
  /// alpha n / lambda_min(C'C), the bound on tr(Pi).
  double bound_trace_Pi = 0.0;
};

/// One entry of a joint sweep; `error` is set when the solve failed at this N.
struct SweepEntry {
  std::size_t N = 0;
  std::optional<PredictorRow> predictor;
  std::optional<FilterRow> filter;
  std::optional<Error> error;
};

std::vector<SweepEntry> asymptotic_sweep(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                                         const NoiseModel& noise, const std::vector<std::size_t>& N_list,
                                         const SolveOptions& options = {});

/// Throws on the first failing N.
std::vector<PredictorRow> predictor_asymptotics(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                                                const NoiseModel& noise, const std::vector<std::size_t>& N_list,
                                                const SolveOptions& options = {});

std::vector<FilterRow> filter_asymptotics(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                                          const NoiseModel& noise, const std::vector<std::size_t>& N_list,
                                          const SolveOptions& options = {});

}  // namespace dgfa
