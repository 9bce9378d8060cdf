#include "dgfa/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace dgfa {

FactorDynamics::FactorDynamics(Matrix A, Matrix Q, const Tolerances& tol)
    : A_(std::move(A)), Q_(std::move(Q)) {
  if (A_.rows() == 0 || A_.rows() != A_.cols() || Q_.rows() != A_.rows() ||
      Q_.cols() != A_.cols()) {
    throw Error(ErrorKind::InvalidDimension, "A and Q must be nonempty n x n matrices");
  }
  require_finite(A_, "A");
  require_finite(Q_, "Q");
  if (!Q_.isApprox(Q_.transpose(), 1e-12) || !is_psd(Q_)) {
    throw Error(ErrorKind::NotPD, "Q must be symmetric positive semidefinite");
  }
  if (spectral_radius(A_) < 1.0 - tol.stability_margin) sigma_ = solve_stein(A_, Q_, tol);
}

const Matrix& FactorDynamics::sigma() const {
  if (!sigma_) throw Error(ErrorKind::NotStable, "A is not asymptotically stable");
  return *sigma_;
}

std::size_t FactorDynamics::reachability_rank(double rank_tol) const {
  const Matrix B = psd_factor(Q_);
  const auto n = A_.rows();
  Matrix reach(n, n * B.cols());
  Matrix block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    reach.middleCols(k * B.cols(), B.cols()) = block;
    block = A_ * block;
  }
  return numerical_rank(reach, rank_tol);
}

bool FactorDynamics::is_reachable(double rank_tol) const {
  return reachability_rank(rank_tol) == n();
}

LoadingGenerator::LoadingGenerator(std::string name, std::size_t n, RowRule rule)
    : name_(std::move(name)), n_(n), rule_(std::move(rule)) {
  if (n_ == 0) throw Error(ErrorKind::InvalidDimension, "loading rule needs n >= 1");
}

Vector LoadingGenerator::row(std::size_t k) const {
  if (k == 0) throw Error(ErrorKind::InvalidDimension, "loading rows are indexed from 1");
  Vector r = rule_(k);
  if (static_cast<std::size_t>(r.size()) != n_) {
    throw Error(ErrorKind::InvalidDimension, "loading rule '" + name_ + "' returned a row of length " +
                                                 std::to_string(r.size()));
  }
  return r;
}

Matrix LoadingGenerator::matrix(std::size_t N) const {
  Matrix C(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(n_));
  for (std::size_t k = 1; k <= N; ++k) C.row(static_cast<Eigen::Index>(k - 1)) = row(k).transpose();
  require_finite(C, "loading matrix");
  return C;
}

LoadingGenerator LoadingGenerator::cyclic(std::string name, const Matrix& pattern) {
  if (pattern.rows() == 0 || pattern.cols() == 0) {
    throw Error(ErrorKind::InvalidDimension, "cyclic loading pattern is empty");
  }
  const auto period = static_cast<std::size_t>(pattern.rows());
  return LoadingGenerator(std::move(name), static_cast<std::size_t>(pattern.cols()),
                          [pattern, period](std::size_t k) -> Vector {
                            return pattern.row(static_cast<Eigen::Index>((k - 1) % period)).transpose();
                          });
}

LoadingGenerator LoadingGenerator::alternating(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidDimension, "alternating loadings need n >= 1");
  return cyclic("alternating", Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

LoadingGenerator LoadingGenerator::ones() { return cyclic("ones", Matrix::Ones(1, 1)); }

LoadingGenerator LoadingGenerator::ramp() {
  return LoadingGenerator("ramp", 1, [](std::size_t k) { return Vector::Constant(1, static_cast<double>(k)); });
}

LoadingGenerator LoadingGenerator::geometric(double ratio) {
  return LoadingGenerator("geometric", 1, [ratio](std::size_t k) {
    return Vector::Constant(1, std::pow(ratio, static_cast<double>(k - 1)));
  });
}

LoadingGenerator LoadingGenerator::perturbed_pair(double eps) {
  return LoadingGenerator("perturbed_pair", 2, [eps](std::size_t k) {
    Vector r(2);
    r << 1.0, k == 1 ? 1.0 + eps : 1.0;
    return r;
  });
}

LoadingGenerator LoadingGenerator::zero(std::size_t n) {
  return cyclic("zero", Matrix::Zero(1, static_cast<Eigen::Index>(n)));
}

NoiseModel::NoiseModel(std::string name, CovRule rule) : name_(std::move(name)), rule_(std::move(rule)) {}

Matrix NoiseModel::covariance(std::size_t N) const {
  Matrix R = rule_(N);
  if (static_cast<std::size_t>(R.rows()) != N || R.rows() != R.cols()) {
    throw Error(ErrorKind::InvalidDimension, "noise rule '" + name_ + "' returned a wrong-sized matrix");
  }
  require_finite(R, "noise covariance");
  return R;
}

namespace {

// Builds an N x N symmetric matrix from an entry rule evaluated on i <= j.
// Entries depend only on (i, j), so leading blocks are bit-identical across N.
template <typename Entry>
Matrix symmetric_from_entries(std::size_t N, Entry entry) {
  const auto n = static_cast<Eigen::Index>(N);
  Matrix R(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      R(i, j) = entry(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      R(j, i) = R(i, j);
    }
  }
  return R;
}

}  // namespace

NoiseModel NoiseModel::identity() { return scaled_identity(1.0); }

NoiseModel NoiseModel::scaled_identity(double variance) {
  if (!(variance > 0.0)) throw Error(ErrorKind::NotPD, "noise variance must be positive");
  return NoiseModel(variance == 1.0 ? "identity" : "scaled_identity", [variance](std::size_t N) {
    return Matrix(variance * Matrix::Identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)));
  });
}

NoiseModel NoiseModel::diagonal_ramp() {
  return NoiseModel("diagonal_ramp", [](std::size_t N) {
    return Matrix(Vector::LinSpaced(static_cast<Eigen::Index>(N), 1.0, static_cast<double>(N)).asDiagonal());
  });
}

NoiseModel NoiseModel::exponential(double rho, double variance) {
  if (!(std::abs(rho) < 1.0) || !(variance > 0.0)) {
    throw Error(ErrorKind::NotPD, "exponential noise needs |rho| < 1 and variance > 0");
  }
  return NoiseModel("exponential", [rho, variance](std::size_t N) {
    return symmetric_from_entries(N, [rho, variance](std::size_t i, std::size_t j) {
      return variance * std::pow(rho, static_cast<double>(j - i));
    });
  });
}

Matrix NoiseModel::square_coupled_propagation(std::size_t N, std::size_t group, double coupling) {
  if (group == 0) throw Error(ErrorKind::InvalidDimension, "group size must be positive");
  const double b = coupling / static_cast<double>(group);
  const double g = static_cast<double>(group);
  const auto n = static_cast<Eigen::Index>(N);
  Matrix M = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto l = static_cast<std::size_t>(i) / group;
      const auto m = static_cast<std::size_t>(j) / group;
      if (l == m) {
        M(i, j) = i == j ? 1.0 : 0.0;
      } else {
        // (b 1 1')^d = b^d g^{d-1} 1 1'
        const double d = static_cast<double>(l - m);
        M(i, j) = std::pow(b, d) * std::pow(g, d - 1.0);
      }
    }
  }
  return M;
}

NoiseModel NoiseModel::square_coupled(std::size_t group, double coupling) {
  if (group == 0) throw Error(ErrorKind::InvalidDimension, "group size must be positive");
  return NoiseModel("square_coupled", [group, coupling](std::size_t N) {
    // Closed form of M M': within square l, V_l = I + s_l 1 1' with
    // s_1 = 0 and s_l = b^2 (g + g^2 s_{l-1}); across squares l > m,
    // Cov(w_l, w_m) = (b 1 1')^{l-m} V_m = b^{l-m} g^{l-m-1} (1 + g s_m) 1 1'.
    const double b = coupling / static_cast<double>(group);
    const double g = static_cast<double>(group);
    const std::size_t squares = (N + group - 1) / group;
    std::vector<double> s(squares, 0.0);
    for (std::size_t l = 1; l < squares; ++l) s[l] = b * b * (g + g * g * s[l - 1]);
    return symmetric_from_entries(N, [&](std::size_t i, std::size_t j) {
      const std::size_t m = i / group;  // i <= j, so square(i) <= square(j)
      const std::size_t l = j / group;
      if (l == m) return (i == j ? 1.0 : 0.0) + s[l];
      const double d = static_cast<double>(l - m);
      return std::pow(b, d) * std::pow(g, d - 1.0) * (1.0 + g * s[m]);
    });
  });
}

TruncatedModel truncate(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                        const NoiseModel& noise, std::size_t N) {
  if (N == 0) throw Error(ErrorKind::InvalidDimension, "N must be at least 1");
  if (loadings.n() != dynamics.n()) {
    throw Error(ErrorKind::InvalidDimension, "loading rule has " + std::to_string(loadings.n()) +
                                                 " columns but the factor has dimension " +
                                                 std::to_string(dynamics.n()));
  }
  Matrix C = loadings.matrix(N);
  Matrix R = noise.covariance(N);
  if (!R.isApprox(R.transpose(), 1e-12)) throw Error(ErrorKind::NotPD, "R_N is not symmetric");
  Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPD, "R_N is not positive definite at N = " + std::to_string(N));
  }
  return TruncatedModel{dynamics, std::move(C), std::move(R), N};
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::diverging: return "diverging";
    case Verdict::bounded: return "bounded";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

void require_increasing(const std::vector<std::size_t>& N_list) {
  if (N_list.empty()) throw Error(ErrorKind::InvalidDimension, "N_list is empty");
  if (N_list.front() == 0) throw Error(ErrorKind::InvalidDimension, "N_list entries must be >= 1");
  for (std::size_t k = 1; k < N_list.size(); ++k) {
    if (N_list[k] <= N_list[k - 1]) {
      throw Error(ErrorKind::InvalidDimension, "N_list must be strictly increasing");
    }
  }
}

bool nondecreasing(const std::vector<double>& v, double tol) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] < v[k - 1] - tol * (1.0 + std::abs(v[k - 1]))) return false;
  }
  return true;
}

Verdict combine(Verdict a, Verdict b) { return a == b ? a : Verdict::inconclusive; }

}  // namespace

Verdict classify_sequence(const std::vector<std::size_t>& N_list, const std::vector<double>& values,
                          const VerdictRule& rule) {
  if (values.size() != N_list.size()) {
    throw Error(ErrorKind::InvalidDimension, "classify_sequence: size mismatch");
  }
  if (values.size() < 2) return Verdict::inconclusive;
  const double first = values.front();
  const double last = values.back();
  const double prev = values[values.size() - 2];
  const double span = static_cast<double>(N_list.back()) / static_cast<double>(N_list.front());
  const double ratio = first > 0.0 ? last / first : (last > 0.0 ? INFINITY : 1.0);

  const std::size_t tail_start = values.size() >= 3 ? values.size() - 3 : 0;
  const std::vector<double> tail(values.begin() + static_cast<std::ptrdiff_t>(tail_start), values.end());
  if (ratio >= rule.growth_factor && span >= rule.min_span && nondecreasing(tail, rule.monotone_tol)) {
    return Verdict::diverging;
  }
  const double scale = std::max(std::abs(last), std::abs(prev));
  if (ratio < rule.growth_factor && std::abs(last - prev) <= rule.flat_tol * scale) {
    return Verdict::bounded;
  }
  return Verdict::inconclusive;
}

DiagnosticsProfile strong_independence_profile(const LoadingGenerator& loadings,
                                               const std::vector<std::size_t>& N_list,
                                               const VerdictRule& rule) {
  require_increasing(N_list);
  const std::size_t n = loadings.n();
  DiagnosticsProfile out;
  out.N_list = N_list;
  for (const std::size_t N : N_list) {
    const Matrix C = loadings.matrix(N);
    Eigen::SelfAdjointEigenSolver<Matrix> es(C.transpose() * C, Eigen::EigenvaluesOnly);
    out.lambda_min_CtC.push_back(es.eigenvalues().minCoeff());

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Vector> others;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) others.emplace_back(C.col(static_cast<Eigen::Index>(j)));
      }
      norms[i] = projection_residual(C.col(static_cast<Eigen::Index>(i)), others).norm;
    }
    out.residual_norms.push_back(std::move(norms));
  }

  out.lambda_min_monotone = nondecreasing(out.lambda_min_CtC, rule.monotone_tol);
  out.verdict_lambda_min = classify_sequence(N_list, out.lambda_min_CtC, rule);

  // Residual norms grow like sqrt(N) when lambda_min grows like N; compare
  // squared norms so both criteria share one growth threshold.
  Verdict residual_verdict = Verdict::diverging;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> column, squared;
    for (const auto& row : out.residual_norms) {
      column.push_back(row[i]);
      squared.push_back(row[i] * row[i]);
    }
    out.residuals_monotone = out.residuals_monotone && nondecreasing(column, rule.monotone_tol);
    const Verdict v = classify_sequence(N_list, squared, rule);
    // Strong independence needs every column to diverge; one bounded column settles it.
    if (v == Verdict::bounded) {
      residual_verdict = Verdict::bounded;
    } else if (v == Verdict::inconclusive && residual_verdict == Verdict::diverging) {
      residual_verdict = Verdict::inconclusive;
    }
  }
  out.verdict_residual = residual_verdict;
  out.verdict_strong_indep = combine(out.verdict_lambda_min, out.verdict_residual);
  return out;
}

DiagnosticsProfile idiosyncrasy_profile(const NoiseModel& noise, const std::vector<std::size_t>& N_list,
                                        const VerdictRule& rule) {
  require_increasing(N_list);
  DiagnosticsProfile out;
  out.N_list = N_list;
  for (const std::size_t N : N_list) {
    const Matrix R = noise.covariance(N);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(R), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw Error(ErrorKind::NotPD, "R_N is not positive definite at N = " + std::to_string(N));
    }
    out.noise_norms.push_back(es.eigenvalues().maxCoeff());
  }
  out.noise_norms_monotone = nondecreasing(out.noise_norms, rule.monotone_tol);
  out.verdict_idiosyncratic = classify_sequence(N_list, out.noise_norms, rule);
  return out;
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ValidationReport validate(const FactorDynamics& dynamics, const LoadingGenerator& loadings,
                          const NoiseModel& noise, std::size_t N_probe, const VerdictRule& rule) {
  ValidationReport report;
  auto add = [&report](std::string name, bool ok, std::string detail) {
    report.checks.push_back(ValidationCheck{std::move(name), ok, std::move(detail)});
  };
  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
  };

  add("stable", dynamics.is_stable(), "spectral_radius(A) = " + fmt(spectral_radius(dynamics.A())));
  const std::size_t rank = dynamics.reachability_rank();
  add("reachable", rank == dynamics.n(),
      "reachability rank " + std::to_string(rank) + " of " + std::to_string(dynamics.n()));
  add("loading_dimension", loadings.n() == dynamics.n(),
      "loading columns " + std::to_string(loadings.n()) + ", factor dimension " + std::to_string(dynamics.n()));

  if (N_probe == 0) N_probe = 1;
  std::vector<std::size_t> probe;
  for (int shift = 4; shift >= 0; --shift) {
    const std::size_t N = N_probe >> shift;
    if (N >= 1 && (probe.empty() || N > probe.back())) probe.push_back(N);
  }
  const std::size_t half = std::max<std::size_t>(1, N_probe / 2);

  try {
    const Matrix R = noise.covariance(N_probe);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(R), Eigen::EigenvaluesOnly);
    const bool pd = R.isApprox(R.transpose(), 1e-12) && es.eigenvalues().minCoeff() > 0.0;
    add("noise_pd", pd, "lambda_min(R_N) = " + fmt(es.eigenvalues().minCoeff()) + " at N = " +
                            std::to_string(N_probe));
    const Matrix Rh = noise.covariance(half);
    add("noise_nested", (R.topLeftCorner(Rh.rows(), Rh.cols()).array() == Rh.array()).all(),
        "R_" + std::to_string(half) + " vs leading block of R_" + std::to_string(N_probe));
  } catch (const Error& e) {
    add("noise_pd", false, e.what());
  }

  try {
    const Matrix C = loadings.matrix(N_probe);
    const Matrix Ch = loadings.matrix(half);
    add("loadings_nested", (C.topRows(Ch.rows()).array() == Ch.array()).all(),
        "C_" + std::to_string(half) + " vs leading rows of C_" + std::to_string(N_probe));
    report.independence = strong_independence_profile(loadings, probe, rule);
    add("strong_independence", report.independence.verdict_strong_indep == Verdict::diverging,
        "lambda_min(C'C): " + fmt(report.independence.lambda_min_CtC.front()) + " -> " +
            fmt(report.independence.lambda_min_CtC.back()) + " (" +
            std::string(to_string(report.independence.verdict_strong_indep)) + ")");
  } catch (const Error& e) {
    add("strong_independence", false, e.what());
  }

  try {
    report.idiosyncrasy = idiosyncrasy_profile(noise, probe, rule);
    add("idiosyncratic_noise", report.idiosyncrasy.verdict_idiosyncratic == Verdict::bounded,
        "||R_N||: " + fmt(report.idiosyncrasy.noise_norms.front()) + " -> " +
            fmt(report.idiosyncrasy.noise_norms.back()) + " (" +
            std::string(to_string(report.idiosyncrasy.verdict_idiosyncratic)) + ")");
  } catch (const Error& e) {
    add("idiosyncratic_noise", false, e.what());
  }
  return report;
}

}  // namespace dgfa
