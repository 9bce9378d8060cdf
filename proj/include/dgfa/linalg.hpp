#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "dgfa/errors.hpp"

namespace dgfa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical tolerances shared by the fixed-point solvers.
struct Tolerances {
  double abs = 1e-10;
  double rel = 1e-9;
  /// Relative change between successive iterates that terminates a fixed-point loop.
  double rel_change = 1e-12;
  std::size_t max_iter = 100000;
  /// A is rejected as unstable when spectral_radius(A) >= 1 - stability_margin.
  double stability_margin = 1e-12;
};

struct SpectralSummary {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double spectral_radius = 0.0;
  bool is_psd = false;
};

struct ProjectionResidual {
  Vector residual;
  double norm = 0.0;
};

/// Result of a Riccati solve with its convergence record.
struct DareResult {
  Matrix P;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

// Stein (discrete Lyapunov) equation  S = A S A' + Q.
Matrix solve_stein(const Matrix& A, const Matrix& Q, const Tolerances& tol = {});

/// Stabilizing solution of the filtering Riccati equation
///
///   P = A [P - P C' (C P C' + R)^{-1} C P] A' + Q
///
/// obtained as the limit of the Riccati recursion started at P0 = Q. The
/// measurement update is carried out in whitened n x n coordinates: with
/// R = L L' and L^{-1} C = U_c T (thin QR), C' R^{-1} C = T' T and the update
/// becomes P - P T' (I + T P T')^{-1} T P, which needs one n x n Cholesky per
/// step instead of an N x N one. C with zero rows or all zero entries falls
/// through to solve_stein(A, Q).
DareResult solve_dare_detailed(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R,
                               const Tolerances& tol = {});
Matrix solve_dare(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R,
                  const Tolerances& tol = {});

/// ||S - A S A' - Q||_F / (||Q||_F + 1).
double stein_residual(const Matrix& A, const Matrix& Q, const Matrix& S);

/// Relative residual of the Riccati equation evaluated in its N x N covariance
/// form (Cholesky of C P C' + R), normalised by ||P||_F + 1.
double dare_residual(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R,
                     const Matrix& P);

/// When `symmetric` is false lambda_min/lambda_max refer to the symmetric part
/// (M + M')/2 while spectral_radius uses the eigenvalues of M itself.
SpectralSummary spectral_summary(const Matrix& M, bool symmetric = true);

double spectral_radius(const Matrix& M);

/// Largest singular value. Zero for empty matrices.
double spectral_norm(const Matrix& M);

/// Residual of v after orthogonal projection onto span(basis). Rank-deficient
/// bases are handled through an SVD with a relative rank cut-off.
ProjectionResidual projection_residual(const Vector& v, const std::vector<Vector>& basis);

/// True when X <= Y in the PSD order, i.e. lambda_min(Y - X) >= -rel_tol (1 + ||Y||).
bool psd_leq(const Matrix& X, const Matrix& Y, double rel_tol = 1e-8);

/// lambda >= -1e-9 (1 + lambda_max) for all eigenvalues of the symmetric part.
bool is_psd(const Matrix& M, double rel_tol = 1e-9);

Matrix symmetrize(const Matrix& M);

/// Number of singular values above rel_tol * sigma_max.
std::size_t numerical_rank(const Matrix& M, double rel_tol = 1e-8);

/// Returns L with L L' = M. Tries plain Cholesky, then adds diagonal jitter up
/// to `max_jitter` (relative to the mean diagonal). Throws NotPD otherwise.
Matrix cholesky_factor(const Matrix& M, double max_jitter = 1e-10);

/// Returns F (m x m, possibly with zero columns) with F F' = M for a symmetric
/// PSD M. Uses Cholesky when possible and a clamped eigen-decomposition for
/// singular PSD input. Throws NotPD on significantly negative eigenvalues.
Matrix psd_factor(const Matrix& M);

void require_finite(const Matrix& M, const char* what);

}  // namespace dgfa
