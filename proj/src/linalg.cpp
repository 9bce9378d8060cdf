#include "dgfa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dgfa {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotStable: return "NotStable";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::SingularInnovation: return "SingularInnovation";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidDimension: return "InvalidDimension";
    case ErrorKind::NotPD: return "NotPD";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::SingularTransform: return "SingularTransform";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

void require_square(const Matrix& M, const char* what) {
  if (M.rows() != M.cols()) {
    throw Error(ErrorKind::InvalidDimension,
                std::string(what) + " must be square, got " + std::to_string(M.rows()) + "x" +
                    std::to_string(M.cols()));
  }
}

void require_stable(const Matrix& A, const Tolerances& tol) {
  const double rho = spectral_radius(A);
  if (!(rho < 1.0 - tol.stability_margin)) {
    throw Error(ErrorKind::NotStable, "spectral radius of A is " + std::to_string(rho));
  }
}

}  // namespace

void require_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " has NaN/Inf entries");
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double spectral_radius(const Matrix& M) {
  require_square(M, "matrix");
  require_finite(M, "matrix");
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "eigenvalue solver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const Matrix& M) {
  require_finite(M, "matrix");
  if (M.size() == 0) return 0.0;
  if (M.rows() == M.cols() && M.isApprox(M.transpose(), 0.0)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

SpectralSummary spectral_summary(const Matrix& M, bool symmetric) {
  require_square(M, "matrix");
  require_finite(M, "matrix");
  SpectralSummary out;
  if (M.size() == 0) {
    out.is_psd = true;
    return out;
  }
  const Matrix S = symmetrize(M);
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  out.lambda_min = es.eigenvalues().minCoeff();
  out.lambda_max = es.eigenvalues().maxCoeff();
  out.spectral_radius =
      symmetric ? std::max(std::abs(out.lambda_min), std::abs(out.lambda_max)) : spectral_radius(M);
  out.is_psd = out.lambda_min >= -1e-9 * (1.0 + std::abs(out.lambda_max));
  return out;
}

bool is_psd(const Matrix& M, double rel_tol) {
  if (M.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M), Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  return es.eigenvalues().minCoeff() >= -rel_tol * (1.0 + std::abs(lmax));
}

bool psd_leq(const Matrix& X, const Matrix& Y, double rel_tol) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
    throw Error(ErrorKind::InvalidDimension, "psd_leq: shape mismatch");
  }
  if (X.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Y - X), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -rel_tol * (1.0 + spectral_norm(symmetrize(Y)));
}

std::size_t numerical_rank(const Matrix& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  return static_cast<std::size_t>((s.array() > cut).count());
}

double stein_residual(const Matrix& A, const Matrix& Q, const Matrix& S) {
  return (S - A * S * A.transpose() - Q).norm() / (Q.norm() + 1.0);
}

Matrix solve_stein(const Matrix& A, const Matrix& Q, const Tolerances& tol) {
  require_square(A, "A");
  require_square(Q, "Q");
  if (A.rows() != Q.rows()) throw Error(ErrorKind::InvalidDimension, "A and Q sizes differ");
  require_finite(A, "A");
  require_finite(Q, "Q");
  require_stable(A, tol);

  // Smith doubling: S_{k+1} = S_k + A_k S_k A_k',  A_{k+1} = A_k^2, which sums
  // the series sum_j A^j Q A'^j in 2^k terms after k steps.
  Matrix S = symmetrize(Q);
  Matrix Ak = A;
  for (std::size_t it = 0; it < tol.max_iter; ++it) {
    const Matrix increment = Ak * S * Ak.transpose();
    S = symmetrize(S + increment);
    Ak = Ak * Ak;
    if (increment.norm() <= tol.rel_change * S.norm()) {
      // One plain fixed-point sweep polishes the last few ulps.
      S = symmetrize(A * S * A.transpose() + Q);
      const double res = stein_residual(A, Q, S);
      if (res > tol.abs + tol.rel) {
        throw Error(ErrorKind::NonConvergence, "Stein residual " + std::to_string(res));
      }
      return S;
    }
  }
  throw Error(ErrorKind::NonConvergence, "Stein doubling did not converge");
}

namespace {

// Square-root factor T (n x n) of C' R^{-1} C, computed without forming R^{-1}.
Matrix whitened_information_factor(const Matrix& C, const Matrix& R) {
  Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "R is not positive definite");
  const Matrix G = llt.matrixL().solve(C);
  if (G.rows() >= G.cols()) {
    Eigen::HouseholderQR<Matrix> qr(G);
    return qr.matrixQR().topRows(G.cols()).triangularView<Eigen::Upper>();
  }
  // Fewer observations than states: T = G already satisfies T'T = G'G.
  return G;
}

}  // namespace

DareResult solve_dare_detailed(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R,
                               const Tolerances& tol) {
  require_square(A, "A");
  require_square(Q, "Q");
  require_square(R, "R");
  const auto n = A.rows();
  if (Q.rows() != n || C.cols() != n || R.rows() != C.rows()) {
    throw Error(ErrorKind::InvalidDimension, "solve_dare: inconsistent shapes");
  }
  require_finite(A, "A");
  require_finite(C, "C");
  require_finite(Q, "Q");
  require_finite(R, "R");
  require_stable(A, tol);

  if (C.rows() == 0 || C.isZero(0.0)) {
    return DareResult{solve_stein(A, Q, tol), 0, 0.0};
  }

  const Matrix T = whitened_information_factor(C, R);
  const Matrix I = Matrix::Identity(T.rows(), T.rows());

  Matrix P = symmetrize(Q);
  for (std::size_t it = 1; it <= tol.max_iter; ++it) {
    const Matrix TP = T * P;
    Eigen::LLT<Matrix> inner(I + TP * T.transpose());
    if (inner.info() != Eigen::Success) {
      throw Error(ErrorKind::SingularInnovation, "innovation block lost positive definiteness");
    }
    const Matrix updated = P - TP.transpose() * inner.solve(TP);
    const Matrix next = symmetrize(A * updated * A.transpose() + Q);
    const double change = (next - P).norm();
    P = next;
    if (change <= tol.rel_change * P.norm()) {
      const double res = dare_residual(A, C, Q, R, P);
      if (res > tol.rel + tol.abs) {
        throw Error(ErrorKind::NonConvergence, "Riccati residual " + std::to_string(res));
      }
      return DareResult{P, it, res};
    }
  }
  throw Error(ErrorKind::NonConvergence,
              "Riccati recursion exhausted " + std::to_string(tol.max_iter) + " iterations");
}

Matrix solve_dare(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R,
                  const Tolerances& tol) {
  return solve_dare_detailed(A, C, Q, R, tol).P;
}

double dare_residual(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R,
                     const Matrix& P) {
  const Matrix CP = C * P;
  Eigen::LLT<Matrix> llt(symmetrize(CP * C.transpose() + R));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularInnovation, "C P C' + R is not positive definite");
  }
  const Matrix inner = P - CP.transpose() * llt.solve(CP);
  return (A * inner * A.transpose() + Q - P).norm() / (P.norm() + 1.0);
}

ProjectionResidual projection_residual(const Vector& v, const std::vector<Vector>& basis) {
  ProjectionResidual out{v, 0.0};
  if (!basis.empty()) {
    Matrix B(v.size(), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j) {
      if (basis[j].size() != v.size()) {
        throw Error(ErrorKind::InvalidDimension, "projection_residual: basis vector length mismatch");
      }
      B.col(static_cast<Eigen::Index>(j)) = basis[j];
    }
    Eigen::BDCSVD<Matrix> svd(B, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    if (s.size() > 0 && s(0) > 0.0) {
      const double cut = 1e-12 * s(0) * static_cast<double>(std::max(B.rows(), B.cols()));
      rank = (s.array() > cut).count();
    }
    const auto U = svd.matrixU().leftCols(rank);
    // Two passes of classical Gram-Schmidt keep the residual orthogonal to
    // working precision.
    for (int pass = 0; pass < 2; ++pass) out.residual -= U * (U.transpose() * out.residual);
  }
  out.norm = out.residual.norm();
  return out;
}

Matrix cholesky_factor(const Matrix& M, double max_jitter) {
  require_square(M, "matrix");
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double scale = M.rows() > 0 ? std::max(M.diagonal().mean(), 1.0) : 1.0;
  for (double jitter = 1e-14; jitter <= max_jitter * (1.0 + 1e-12); jitter *= 10.0) {
    llt.compute(M + jitter * scale * Matrix::Identity(M.rows(), M.cols()));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw Error(ErrorKind::NotPD, "Cholesky failed even with diagonal jitter");
}

Matrix psd_factor(const Matrix& M) {
  require_square(M, "matrix");
  require_finite(M, "matrix");
  if (M.size() == 0) return M;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  const Vector& ev = es.eigenvalues();
  const double lmax = std::max(ev.maxCoeff(), 0.0);
  if (ev.minCoeff() < -1e-9 * (1.0 + lmax)) {
    throw Error(ErrorKind::NotPD, "covariance has a negative eigenvalue");
  }
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace dgfa
