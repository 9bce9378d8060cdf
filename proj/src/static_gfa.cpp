#include "dgfa/static_gfa.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace dgfa {

StaticModel::StaticModel(Matrix C, Matrix sigma_tilde) : C_(std::move(C)), sigma_tilde_(std::move(sigma_tilde)) {
  if (sigma_tilde_.rows() != sigma_tilde_.cols() || sigma_tilde_.rows() != C_.rows()) {
    throw Error(ErrorKind::InvalidDimension, "StaticModel: C is N x n and the noise covariance must be N x N");
  }
  require_finite(C_, "C");
  require_finite(sigma_tilde_, "noise covariance");
  if (!sigma_tilde_.isApprox(sigma_tilde_.transpose(), 1e-12)) {
    throw Error(ErrorKind::NotPD, "noise covariance is not symmetric");
  }
}

Matrix StaticModel::output_covariance() const { return C_ * C_.transpose() + sigma_tilde_; }

namespace {

struct InformationForm {
  Eigen::LLT<Matrix> noise;   // S = L L'
  Matrix weighted;            // S^{-1} C
  Eigen::LLT<Matrix> info;    // I + C' S^{-1} C
};

InformationForm information_form(const StaticModel& model) {
  InformationForm f;
  const auto n = static_cast<Eigen::Index>(model.n());
  f.noise.compute(model.sigma_tilde());
  if (model.N() > 0 && f.noise.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPD, "noise covariance failed Cholesky");
  }
  f.weighted = model.N() > 0 ? Matrix(f.noise.solve(model.C())) : Matrix::Zero(0, n);
  f.info.compute(symmetrize(Matrix::Identity(n, n) + model.C().transpose() * f.weighted));
  if (f.info.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "information matrix failed Cholesky");
  return f;
}

}  // namespace

Matrix static_error_covariance(const StaticModel& model) {
  const auto n = static_cast<Eigen::Index>(model.n());
  if (model.N() == 0) return Matrix::Identity(n, n);
  const InformationForm f = information_form(model);
  return symmetrize(f.info.solve(Matrix::Identity(n, n)));
}

bool satisfies_error_bound(const StaticModel& model, const Matrix& err_cov) {
  if (model.N() == 0) return true;
  const Matrix gram = model.C().transpose() * model.C();
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success || numerical_rank(gram, 1e-12) < model.n()) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.sigma_tilde(), Eigen::EigenvaluesOnly);
  const double alpha = es.eigenvalues().maxCoeff();
  const Matrix bound = alpha * llt.solve(Matrix::Identity(gram.rows(), gram.cols()));
  return psd_leq(err_cov, symmetrize(bound));
}

Matrix static_delta_covariance(const StaticModel& model) {
  return symmetrize(model.C() * static_error_covariance(model) * model.C().transpose());
}

StaticEstimate bayes_estimate(const StaticModel& model, const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != model.N()) {
    throw Error(ErrorKind::InvalidDimension, "observation length does not match the model");
  }
  const auto n = static_cast<Eigen::Index>(model.n());
  StaticEstimate est;
  if (model.N() == 0) {
    est.xhat = Vector::Zero(n);
    est.err_cov = Matrix::Identity(n, n);
    est.delta_cov = Matrix::Zero(0, 0);
    est.innovation = Vector::Zero(0);
    return est;
  }

  const InformationForm f = information_form(model);
  est.xhat = f.info.solve(f.weighted.transpose() * y);
  est.err_cov = symmetrize(f.info.solve(Matrix::Identity(n, n)));
  est.delta_cov = symmetrize(model.C() * est.err_cov * model.C().transpose());
  est.innovation = y - model.C() * est.xhat;

  if (model.N() <= kCrossCheckLimit) {
    Eigen::LLT<Matrix> out(model.output_covariance());
    if (out.info() != Eigen::Success) throw Error(ErrorKind::NotPD, "output covariance failed Cholesky");
    const Vector alt = model.C().transpose() * out.solve(y);
    est.cross_check_rel_diff = (alt - est.xhat).norm() / std::max(est.xhat.norm(), 1e-300);
    if (est.xhat.norm() == 0.0) est.cross_check_rel_diff = alt.norm();
  }
  return est;
}

StaticFamily static_family(const LoadingGenerator& loadings, const NoiseModel& noise) {
  return [loadings, noise](std::size_t N) { return StaticModel(loadings.matrix(N), noise.covariance(N)); };
}

std::vector<StaticSweepRow> static_sweep(const StaticFamily& family, const std::vector<std::size_t>& N_list) {
  std::vector<StaticSweepRow> rows;
  rows.reserve(N_list.size());
  for (const std::size_t N : N_list) {
    const StaticModel model = family(N);
    StaticSweepRow row;
    row.N = N;
    const Matrix err = static_error_covariance(model);
    row.err_cov_norm = spectral_norm(err);
    if (N > 0) {
      const Matrix& C = model.C();
      // diag(C E C') row by row avoids forming the N x N matrix.
      row.delta_max_diag = ((C * err).cwiseProduct(C)).rowwise().sum().maxCoeff();
      // Nonzero spectrum of C E C' equals that of E^{1/2} C'C E^{1/2}.
      const Matrix half = psd_factor(err);
      Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(half.transpose() * C.transpose() * C * half),
                                               Eigen::EigenvaluesOnly);
      row.delta_lambda_max = es.eigenvalues().maxCoeff();
      Eigen::SelfAdjointEigenSolver<Matrix> noise(model.sigma_tilde(), Eigen::EigenvaluesOnly);
      row.alpha = noise.eigenvalues().maxCoeff();
      row.coercivity = noise.eigenvalues().minCoeff();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dgfa
