#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dgfa/linalg.hpp"

namespace dgfa {

/// Hidden-factor recursion x(t+1) = A x(t) + v(t), Cov v = Q.
///
/// Construction only checks shapes and finiteness so that unstable or
/// unreachable pairs can still be handed to validate(); the stationary
/// covariance is cached when A is stable.
class FactorDynamics {
 public:
  FactorDynamics(Matrix A, Matrix Q, const Tolerances& tol = {});

  const Matrix& A() const { return A_; }
  const Matrix& Q() const { return Q_; }
  std::size_t n() const { return static_cast<std::size_t>(A_.rows()); }

  bool is_stable() const { return sigma_.has_value(); }
  /// Stationary covariance, the solution of S = A S A' + Q. Throws NotStable.
  const Matrix& sigma() const;

  /// Rank of [B, AB, ..., A^{n-1}B] with B a full-rank factor of Q equals n.
  bool is_reachable(double rank_tol = 1e-8) const;
  std::size_t reachability_rank(double rank_tol = 1e-8) const;

 private:
  Matrix A_;
  Matrix Q_;
  std::optional<Matrix> sigma_;
};

/// Deterministic row rule k -> c_k (k = 1, 2, ...) for the loading matrix.
/// Truncations are nested by construction.
class LoadingGenerator {
 public:
  using RowRule = std::function<Vector(std::size_t)>;

  LoadingGenerator(std::string name, std::size_t n, RowRule rule);

  const std::string& name() const { return name_; }
  std::size_t n() const { return n_; }
  Vector row(std::size_t k) const;
  /// First N rows, N x n.
  Matrix matrix(std::size_t N) const;

  /// Rows cycle through `pattern` (p x n): row k = pattern.row((k-1) mod p).
  static LoadingGenerator cyclic(std::string name, const Matrix& pattern);
  /// Row k = e_{(k-1) mod n}: the alternating sensor pattern for n = 2.
  static LoadingGenerator alternating(std::size_t n);
  static LoadingGenerator ones();
  /// Row k = k (single column).
  static LoadingGenerator ramp();
  /// Row k = ratio^{k-1} (single column).
  static LoadingGenerator geometric(double ratio = 2.0);
  /// Two columns (1, 1 + eps [k == 1]): all-ones plus a single-entry perturbation.
  static LoadingGenerator perturbed_pair(double eps = 1.0);
  static LoadingGenerator zero(std::size_t n);

 private:
  std::string name_;
  std::size_t n_;
  RowRule rule_;
};

/// Deterministic rule N -> R_N, the covariance of the first N noise entries.
/// The rule must produce nested matrices (R_N is the leading block of R_N').
class NoiseModel {
 public:
  using CovRule = std::function<Matrix(std::size_t)>;

  NoiseModel(std::string name, CovRule rule);

  const std::string& name() const { return name_; }
  Matrix covariance(std::size_t N) const;

  static NoiseModel identity();
  static NoiseModel scaled_identity(double variance);
  /// R_N = diag(1, 2, ..., N): not idiosyncratic.
  static NoiseModel diagonal_ramp();
  /// R_N(i, j) = variance * rho^{|i-j|}.
  static NoiseModel exponential(double rho, double variance = 1.0);
  /// Sensors on the vertices of nested squares. With w = M n and n unit
  /// white noise, each square adds (coupling / group) times the sum of the
  /// previous square's noise:  w_l = (coupling/group) 1 1' w_{l-1} + n_l.
  /// R_N = M_N M_N' with M_N the leading block of the propagation matrix.
  static NoiseModel square_coupled(std::size_t group = 4, double coupling = 0.5);
  /// Lower-triangular propagation matrix M_N of square_coupled().
  static Matrix square_coupled_propagation(std::size_t N, std::size_t group, double coupling);

 private:
  std::string name_;
  CovRule rule_;
};

/// One member of the nested model family at cross-sectional dimension N.
struct TruncatedModel {
  FactorDynamics dynamics;
  Matrix C;
  Matrix R;
  std::size_t N = 0;

  std::size_t n() const { return dynamics.n(); }
};

TruncatedModel truncate(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                        const NoiseModel& noise, std::size_t N);

enum class Verdict { diverging, bounded, inconclusive };
std::string_view to_string(Verdict v);

/// Thresholds for turning a finite sequence into an asymptotic verdict.
struct VerdictRule {
  /// "diverging": last / first >= growth_factor over at least a decade of N
  /// with a nondecreasing tail.
  double growth_factor = 4.0;
  double min_span = 10.0;
  /// "bounded": last relative increment <= flat_tol and last / first < growth_factor.
  double flat_tol = 0.05;
  /// Relative slack for the monotonicity checks.
  double monotone_tol = 1e-9;
};

Verdict classify_sequence(const std::vector<std::size_t>& N_list, const std::vector<double>& values,
                          const VerdictRule& rule = {});

struct DiagnosticsProfile {
  std::vector<std::size_t> N_list;
  std::vector<double> lambda_min_CtC;
  /// residual_norms[k][i] = || c_N^i - proj(c_N^i | other columns) || at N_list[k].
  std::vector<std::vector<double>> residual_norms;
  std::vector<double> noise_norms;
  Verdict verdict_strong_indep = Verdict::inconclusive;
  /// Separate verdicts of the two strong-independence criteria.
  Verdict verdict_lambda_min = Verdict::inconclusive;
  Verdict verdict_residual = Verdict::inconclusive;
  Verdict verdict_idiosyncratic = Verdict::inconclusive;
  /// Monotonicity in N of lambda_min and of every residual column (nested truncations).
  bool lambda_min_monotone = true;
  bool residuals_monotone = true;
  bool noise_norms_monotone = true;
};

DiagnosticsProfile strong_independence_profile(const LoadingGenerator& loadings,
                                               const std::vector<std::size_t>& N_list,
                                               const VerdictRule& rule = {});

DiagnosticsProfile idiosyncrasy_profile(const NoiseModel& noise,
                                        const std::vector<std::size_t>& N_list,
                                        const VerdictRule& rule = {});

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  DiagnosticsProfile independence;
  DiagnosticsProfile idiosyncrasy;

  bool all_passed() const;
  const ValidationCheck* find(std::string_view name) const;
};

/// Checks stability of A, reachability of (A, Q), R_N > 0 at N_probe, nesting
/// of both generators, and the two asymptotic verdicts over the probe sweep
/// {N_probe/16, N_probe/8, ..., N_probe}. Never throws on model defects.
ValidationReport validate(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                          const NoiseModel& noise, std::size_t N_probe = 256,
                          const VerdictRule& rule = {});

}  // namespace dgfa
