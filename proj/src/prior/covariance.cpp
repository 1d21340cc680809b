#include "pnpeval/covariance.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace pnpeval::prior {

Covariance Covariance::isotropic(int dim, double variance) {
  if (dim < 1) throw std::invalid_argument("Covariance: dimension must be >= 1");
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("Covariance: isotropic variance must be positive");
  Covariance c;
  c.form_ = Form::isotropic;
  c.dim_ = dim;
  c.iso_ = variance;
  return c;
}

Covariance Covariance::diagonal(Vector variances) {
  if (variances.size() < 1) throw std::invalid_argument("Covariance: empty diagonal");
  if (!variances.allFinite() || !(variances.minCoeff() > 0.0))
    throw std::invalid_argument("Covariance: diagonal entries must be positive");
  Covariance c;
  c.form_ = Form::diagonal;
  c.dim_ = static_cast<int>(variances.size());
  c.values_ = std::move(variances);
  return c;
}

Covariance Covariance::full(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
    throw std::invalid_argument("Covariance: full covariance must be square");
  if (!sigma.allFinite()) throw std::invalid_argument("Covariance: non-finite entries");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("Covariance: full covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (sigma + sigma.transpose()));
  if (solver.info() != Eigen::Success)
    throw std::invalid_argument("Covariance: eigendecomposition failed");
  if (!(solver.eigenvalues().minCoeff() > 0.0))
    throw std::invalid_argument("Covariance: matrix is not positive definite");
  return spectral(std::make_shared<const Matrix>(solver.eigenvectors()), solver.eigenvalues());
}

Covariance Covariance::spectral(std::shared_ptr<const Matrix> basis, Vector eigenvalues) {
  if (!basis || basis->rows() != basis->cols() || basis->cols() != eigenvalues.size())
    throw std::invalid_argument("Covariance: basis and eigenvalues disagree in size");
  if (!eigenvalues.allFinite() || !(eigenvalues.minCoeff() > 0.0))
    throw std::invalid_argument("Covariance: eigenvalues must be positive");
  Covariance c;
  c.form_ = Form::full;
  c.dim_ = static_cast<int>(eigenvalues.size());
  c.values_ = std::move(eigenvalues);
  c.basis_ = std::move(basis);
  c.diag_ = (c.basis_->array().square().matrix() * c.values_);
  return c;
}

Vector Covariance::eigenvalues() const {
  if (form_ == Form::isotropic) return Vector::Constant(dim_, iso_);
  return values_;
}

double Covariance::min_eigenvalue() const {
  return form_ == Form::isotropic ? iso_ : values_.minCoeff();
}

double Covariance::max_eigenvalue() const {
  return form_ == Form::isotropic ? iso_ : values_.maxCoeff();
}

Vector Covariance::diagonal_entries() const {
  switch (form_) {
    case Form::isotropic:
      return Vector::Constant(dim_, iso_);
    case Form::diagonal:
      return values_;
    case Form::full:
    default:
      return diag_;
  }
}

Matrix Covariance::dense() const {
  switch (form_) {
    case Form::isotropic:
      return iso_ * Matrix::Identity(dim_, dim_);
    case Form::diagonal:
      return values_.asDiagonal();
    case Form::full:
    default:
      return (*basis_) * values_.asDiagonal() * basis_->transpose();
  }
}

}  // namespace pnpeval::prior
