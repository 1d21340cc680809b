#pragma once

#include "pnpeval/common.hpp"
#include "pnpeval/tomo.hpp"

#include <memory>
#include <mutex>
#include <string>

namespace pnpeval::tomo {

/// A linear measurement operator H: R^n -> R^m together with the approximate
/// inverse that guidance methods use in place of H^dagger.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> out) const = 0;
  virtual void apply_adjoint(std::span<const double> s, std::span<double> out) const = 0;
  /// FBP for the Radon transform, Moore-Penrose for explicit matrices.
  virtual void apply_approx_inverse(std::span<const double> s, std::span<double> out) const = 0;
  virtual std::string describe() const = 0;

  Vector forward(const Vector& x) const;
  Vector adjoint(const Vector& s) const;
  Vector approx_inverse(const Vector& s) const;

  /// Explicit m x n matrix, assembled column by column from apply().
  Matrix dense() const;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

class RadonOperator final : public LinearOperator {
 public:
  explicit RadonOperator(GeometryPtr geometry);

  const RadonGeometry& geometry() const { return *geometry_; }
  const GeometryPtr& geometry_ptr() const { return geometry_; }

  int input_dim() const override { return geometry_->grid().n(); }
  int output_dim() const override { return geometry_->measurement_dim(); }
  void apply(std::span<const double> x, std::span<double> out) const override;
  void apply_adjoint(std::span<const double> s, std::span<double> out) const override;
  void apply_approx_inverse(std::span<const double> s, std::span<double> out) const override;
  std::string describe() const override;

 private:
  GeometryPtr geometry_;
};

/// Explicit dense operator; used for tiny analytic test problems (n <= 3,
/// identity maps, degenerate zero operators).
class MatrixOperator final : public LinearOperator {
 public:
  explicit MatrixOperator(Matrix h);

  const Matrix& matrix() const { return h_; }

  int input_dim() const override { return static_cast<int>(h_.cols()); }
  int output_dim() const override { return static_cast<int>(h_.rows()); }
  void apply(std::span<const double> x, std::span<double> out) const override;
  void apply_adjoint(std::span<const double> s, std::span<double> out) const override;
  void apply_approx_inverse(std::span<const double> s, std::span<double> out) const override;
  std::string describe() const override;

 private:
  Matrix h_;
  Matrix pinv_;
};

/// Eigendecomposition H^T H = basis * diag(eigenvalues) * basis^T with
/// eigenvalues clamped at zero.
struct GramSpectrum {
  Matrix basis;
  Vector eigenvalues;
};

/// H together with the noise level and lazily built dense factors. Immutable
/// from the caller's point of view; the caches are filled once, thread-safely.
class ObservationModel {
 public:
  ObservationModel(OperatorPtr op, NoiseModel noise);
  ObservationModel(const ObservationModel&) = delete;
  ObservationModel& operator=(const ObservationModel&) = delete;

  const LinearOperator& op() const { return *op_; }
  const OperatorPtr& op_ptr() const { return op_; }
  const NoiseModel& noise() const { return noise_; }
  double sigma_y() const { return noise_.sigma_y(); }
  int n() const { return op_->input_dim(); }
  int m() const { return op_->output_dim(); }

  const Matrix& dense() const;
  const Matrix& gram() const;
  const GramSpectrum& spectrum() const;
  const Matrix& pseudo_inverse() const;

 private:
  OperatorPtr op_;
  NoiseModel noise_;
  mutable std::once_flag dense_once_, gram_once_, spectrum_once_, pinv_once_;
  mutable Matrix dense_, gram_, pinv_;
  mutable GramSpectrum spectrum_;
};

using ObservationPtr = std::shared_ptr<const ObservationModel>;

ObservationPtr make_radon_observation(const GeometryPtr& geom, const NoiseModel& noise);
ObservationPtr make_matrix_observation(Matrix h, const NoiseModel& noise);

}  // namespace pnpeval::tomo
