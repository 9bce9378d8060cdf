#include "dgfa/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dgfa {

namespace {

Eigen::LLT<Matrix> factor_innovation(const Matrix& Lambda) {
  Eigen::LLT<Matrix> llt(Lambda);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "innovation covariance failed Cholesky");
  return llt;
}

double rel_diff(const Matrix& X, const Matrix& Y) { return (X - Y).norm() / std::max(Y.norm(), 1e-300); }

double sym_lambda_max(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double sym_lambda_min(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

PredictorSolution predictor_solution(const TruncatedModel& tm, const SolveOptions& options) {
  const FactorDynamics& dyn = tm.dynamics;
  if (tm.C.rows() != tm.R.rows() || tm.C.cols() != dyn.A().rows()) {
    throw Error(ErrorKind::InvalidDimension, "truncated model has inconsistent shapes");
  }
  if (tm.C.isZero(0.0)) throw Error(ErrorKind::InvalidModel, "loading matrix is identically zero");
  if (!dyn.is_stable()) throw Error(ErrorKind::NotStable, "A is not asymptotically stable");
  if (!options.allow_unreachable && !dyn.is_reachable()) {
    throw Error(ErrorKind::InvalidModel, "(A, Q) is not reachable");
  }

  const Matrix& A = dyn.A();
  const DareResult dare = solve_dare_detailed(A, tm.C, dyn.Q(), tm.R, options.tol);

  PredictorSolution sol;
  sol.P = dare.P;
  sol.iterations = dare.iterations;
  sol.riccati_residual = dare.relative_residual;

  const Matrix CP = tm.C * sol.P;
  sol.Lambda = symmetrize(CP * tm.C.transpose() + tm.R);
  const auto llt = factor_innovation(sol.Lambda);
  const Matrix X = llt.solve(CP);  // Lambda^{-1} C P
  sol.K = A * X.transpose();
  sol.Q_tilde = symmetrize(A * (CP.transpose() * X) * A.transpose());

  sol.closed_loop_radius = spectral_radius(A - sol.K * tm.C);
  if (!(sol.closed_loop_radius < 1.0)) {
    throw Error(ErrorKind::NonConvergence, "Riccati solution is not stabilizing");
  }
  return sol;
}

FilterSolution filter_solution(const TruncatedModel& tm, const PredictorSolution& pred) {
  const auto n = pred.P.rows();
  if (pred.Lambda.rows() != tm.C.rows() || n != tm.C.cols()) {
    throw Error(ErrorKind::InvalidDimension, "predictor solution does not match the model");
  }
  FilterSolution sol;
  const auto llt = factor_innovation(pred.Lambda);
  const Matrix CP = tm.C * pred.P;
  sol.L = llt.solve(CP).transpose();

  Eigen::LLT<Matrix> noise(tm.R);
  if (noise.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "R_N failed Cholesky");
  const Matrix G = noise.matrixL().solve(tm.C);
  const Matrix info_gain = G.transpose() * G;  // C' R^{-1} C

  Eigen::LLT<Matrix> p_llt(pred.P);
  if (p_llt.info() == Eigen::Success) {
    const Matrix I = Matrix::Identity(n, n);
    Eigen::LLT<Matrix> info(symmetrize(p_llt.solve(I) + info_gain));
    if (info.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "filter information matrix failed Cholesky");
    sol.Pi = symmetrize(info.solve(I));
  } else {
    // Singular P (unreachable pair): fall back to the covariance form.
    sol.Pi = symmetrize(pred.P - CP.transpose() * llt.solve(CP));
  }

  sol.Lambda_hat = symmetrize(tm.R * llt.solve(tm.R));
  return sol;
}

Vector innovation_transform(const Matrix& C, const Matrix& L, const Vector& vec, TransformDirection direction) {
  if (C.rows() != vec.size() || L.cols() != vec.size() || L.rows() != C.cols()) {
    throw Error(ErrorKind::InvalidDimension, "innovation_transform: inconsistent shapes");
  }
  if (direction == TransformDirection::predictor_to_filter) return vec - C * (L * vec);

  const auto n = C.cols();
  const Matrix core = Matrix::Identity(n, n) - L * C;
  Eigen::FullPivLU<Matrix> lu(core);
  if (n > 0 && (!lu.isInvertible() || lu.rcond() < 1e3 * std::numeric_limits<double>::epsilon())) {
    throw Error(ErrorKind::SingularTransform, "I - C L is numerically singular");
  }
  if (n == 0) return vec;
  return vec + C * lu.solve(L * vec);
}

double IdentityCheck::max() const {
  return std::max({gain_identity, lambda_hat_forms, q_tilde_identity, pi_forms});
}

IdentityCheck check_identities(const TruncatedModel& tm, const PredictorSolution& pred, const FilterSolution& filt) {
  const auto N = tm.C.rows();
  const auto llt = factor_innovation(pred.Lambda);
  const Matrix I = Matrix::Identity(N, N);
  const Matrix R_Linv = llt.solve(tm.R).transpose();  // R Lambda^{-1}
  const Matrix ImCL = I - tm.C * filt.L;

  IdentityCheck out;
  out.gain_identity = rel_diff(ImCL, R_Linv);
  out.lambda_hat_forms = rel_diff(filt.Lambda_hat, symmetrize(ImCL * pred.Lambda * ImCL.transpose()));
  const Matrix& A = tm.dynamics.A();
  out.q_tilde_identity = rel_diff(pred.Q_tilde, A * pred.P * A.transpose() - pred.P + tm.dynamics.Q());
  const Matrix CP = tm.C * pred.P;
  out.pi_forms = rel_diff(filt.Pi, symmetrize(pred.P - CP.transpose() * llt.solve(CP)));
  return out;
}

namespace {

struct SweepContext {
  Matrix AQAt;
  Matrix sigma_inf;
  double norm_A_sq = 0.0;
};

SweepEntry analyze(const FactorDynamics& dynamics, const LoadingGenerator& loadings, const NoiseModel& noise,
                   std::size_t N, const SolveOptions& options, const SweepContext& ctx) {
  SweepEntry entry;
  entry.N = N;
  try {
    const TruncatedModel tm = truncate(dynamics, loadings, noise, N);
    const PredictorSolution pred = predictor_solution(tm, options);
    const FilterSolution filt = filter_solution(tm, pred);
    const Matrix& A = dynamics.A();
    const Matrix gram = tm.C.transpose() * tm.C;
    const double lambda_min_gram = sym_lambda_min(gram);
    const double alpha = sym_lambda_max(tm.R);
    const double n = static_cast<double>(tm.n());

    PredictorRow p;
    p.N = N;
    p.norm_P_minus_Q = spectral_norm(symmetrize(pred.P - dynamics.Q()));
    {
      // Nonzero spectrum of C P C' equals that of F' C'C F with P = F F'.
      const Matrix F = psd_factor(pred.P);
      Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(F.transpose() * gram * F), Eigen::EigenvaluesOnly);
      const Vector ev = es.eigenvalues().reverse();
      p.top_eigs_CPCt.assign(ev.data(), ev.data() + ev.size());
      p.lambda_max_CPCt = ev(0);
    }
    p.norm_Qtilde_minus_AQAt = spectral_norm(symmetrize(pred.Q_tilde - ctx.AQAt));
    p.norm_Sigma_pred_minus_inf =
        spectral_norm(symmetrize(solve_stein(A, pred.Q_tilde, options.tol) - ctx.sigma_inf));
    p.bound_P_minus_Q = lambda_min_gram > 0.0 ? ctx.norm_A_sq * alpha / lambda_min_gram
                                              : std::numeric_limits<double>::infinity();
    p.lambda_max_Lambda = sym_lambda_max(pred.Lambda);
    p.trace_P = pred.P.trace();
    p.norm_P = spectral_norm(pred.P);
    p.riccati_residual = pred.riccati_residual;
    p.closed_loop_radius = pred.closed_loop_radius;

    FilterRow f;
    f.N = N;
    f.norm_Pi = spectral_norm(filt.Pi);
    f.trace_Pi = filt.Pi.trace();
    f.norm_Lambda_hat = sym_lambda_max(filt.Lambda_hat);
    const Vector diag = (tm.C * filt.Pi).cwiseProduct(tm.C).rowwise().sum();
    f.delta_hat_euclid = std::sqrt(std::max(diag.sum(), 0.0));
    f.delta_hat_inf = std::sqrt(std::max(diag.maxCoeff(), 0.0));
    f.norm_R = alpha;
    f.bound_trace_Pi = lambda_min_gram > 0.0 ? alpha * n / lambda_min_gram : std::numeric_limits<double>::infinity();

    entry.predictor = std::move(p);
    entry.filter = f;
  } catch (const Error& e) {
    entry.error = e;
  }
  return entry;
}

}  // namespace

std::vector<SweepEntry> asymptotic_sweep(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                                         const NoiseModel& noise, const std::vector<std::size_t>& N_list,
                                         const SolveOptions& options) {
  for (std::size_t k = 0; k < N_list.size(); ++k) {
    if (N_list[k] == 0 || (k > 0 && N_list[k] <= N_list[k - 1])) {
      throw Error(ErrorKind::InvalidDimension, "N_list must be positive and strictly increasing");
    }
  }
  SweepContext ctx;
  const Matrix& A = dynamics.A();
  ctx.AQAt = symmetrize(A * dynamics.Q() * A.transpose());
  ctx.norm_A_sq = std::pow(spectral_norm(A), 2);
  ctx.sigma_inf = dynamics.is_stable() ? solve_stein(A, ctx.AQAt, options.tol) : Matrix();

  std::vector<SweepEntry> out;
  out.reserve(N_list.size());
  for (const std::size_t N : N_list) out.push_back(analyze(dynamics, loadings, noise, N, options, ctx));
  return out;
}

std::vector<PredictorRow> predictor_asymptotics(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                                                const NoiseModel& noise, const std::vector<std::size_t>& N_list,
                                                const SolveOptions& options) {
  std::vector<PredictorRow> rows;
  for (auto& e : asymptotic_sweep(dynamics, loadings, noise, N_list, options)) {
    if (e.error) throw *e.error;
    rows.push_back(std::move(*e.predictor));
  }
  return rows;
}

std::vector<FilterRow> filter_asymptotics(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                                          const NoiseModel& noise, const std::vector<std::size_t>& N_list,
                                          const SolveOptions& options) {
  std::vector<FilterRow> rows;
  for (auto& e : asymptotic_sweep(dynamics, loadings, noise, N_list, options)) {
    if (e.error) throw *e.error;
    rows.push_back(*e.filter);
  }
  return rows;
}

}  // namespace dgfa
