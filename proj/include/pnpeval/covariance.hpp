#pragma once

#include "pnpeval/common.hpp"

#include <cmath>
#include <memory>

namespace pnpeval::prior {

/// Symmetric positive-definite covariance in one of three forms. Full
/// covariances keep their eigendecomposition, so any spectral function
/// f(Sigma) (inverse of Sigma + s^2 I, square root, shrinkage factors, ...)
/// costs two matrix-vector products. Bases can be shared between
/// covariances that are diagonal in the same eigenbasis.
class Covariance {
 public:
  enum class Form { isotropic, diagonal, full };

  static Covariance isotropic(int dim, double variance);
  static Covariance diagonal(Vector variances);
  /// Eigendecomposes `sigma`; throws std::invalid_argument unless SPD.
  static Covariance full(const Matrix& sigma);
  /// basis * diag(eigenvalues) * basis^T with an orthonormal basis.
  static Covariance spectral(std::shared_ptr<const Matrix> basis, Vector eigenvalues);

  Form form() const { return form_; }
  int dim() const { return dim_; }
  bool is_isotropic() const { return form_ == Form::isotropic; }
  double isotropic_variance() const { return iso_; }
  /// Eigenvalues (isotropic: dim copies; diagonal: the diagonal).
  Vector eigenvalues() const;
  const std::shared_ptr<const Matrix>& basis() const { return basis_; }
  double min_eigenvalue() const;
  double max_eigenvalue() const;

  /// f(Sigma) v for a scalar function f applied to the eigenvalues.
  template <typename F>
  Vector apply(F&& f, const Vector& v) const {
    switch (form_) {
      case Form::isotropic:
        return f(iso_) * v;
      case Form::diagonal:
        return values_.unaryExpr(f).cwiseProduct(v);
      case Form::full:
      default: {
        Vector coeffs = basis_->transpose() * v;
        coeffs = values_.unaryExpr(f).cwiseProduct(coeffs);
        return (*basis_) * coeffs;
      }
    }
  }

  /// f(Sigma) applied to each column of `v`.
  template <typename F>
  Matrix apply_columns(F&& f, const Matrix& v) const {
    switch (form_) {
      case Form::isotropic:
        return f(iso_) * v;
      case Form::diagonal:
        return values_.unaryExpr(f).asDiagonal() * v;
      case Form::full:
      default: {
        Matrix coeffs = basis_->transpose() * v;
        coeffs = values_.unaryExpr(f).asDiagonal() * coeffs;
        return (*basis_) * coeffs;
      }
    }
  }

  /// sum_i log f(lambda_i).
  template <typename F>
  double log_det(F&& f) const {
    if (form_ == Form::isotropic) return dim_ * std::log(f(iso_));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < values_.size(); ++i) acc += std::log(f(values_[i]));
    return acc;
  }

  Vector diagonal_entries() const;
  Matrix dense() const;

 private:
  Covariance() = default;

  Form form_ = Form::isotropic;
  int dim_ = 0;
  double iso_ = 0.0;
  Vector values_;
  std::shared_ptr<const Matrix> basis_;
  Vector diag_;  // full form only
};

}  // namespace pnpeval::prior
