#include "pnpeval/linear_operator.hpp"

#include <stdexcept>

namespace pnpeval::tomo {

Vector LinearOperator::forward(const Vector& x) const {
  Vector out(output_dim());
  apply(as_span(x), as_span(out));
  return out;
}

Vector LinearOperator::adjoint(const Vector& s) const {
  Vector out(input_dim());
  apply_adjoint(as_span(s), as_span(out));
  return out;
}

Vector LinearOperator::approx_inverse(const Vector& s) const {
  Vector out(input_dim());
  apply_approx_inverse(as_span(s), as_span(out));
  return out;
}

Matrix LinearOperator::dense() const {
  const int n = input_dim();
  Matrix h(output_dim(), n);
  Vector unit = Vector::Zero(n);
  Vector col(output_dim());
  for (int j = 0; j < n; ++j) {
    unit[j] = 1.0;
    apply(as_span(unit), as_span(col));
    h.col(j) = col;
    unit[j] = 0.0;
  }
  return h;
}

RadonOperator::RadonOperator(GeometryPtr geometry) : geometry_(std::move(geometry)) {
  if (!geometry_) throw std::invalid_argument("RadonOperator: null geometry");
}

void RadonOperator::apply(std::span<const double> x, std::span<double> out) const {
  project(*geometry_, x, out);
}

void RadonOperator::apply_adjoint(std::span<const double> s, std::span<double> out) const {
  backproject(*geometry_, s, out);
}

void RadonOperator::apply_approx_inverse(std::span<const double> s, std::span<double> out) const {
  filtered_backproject(*geometry_, s, out);
}

std::string RadonOperator::describe() const {
  return "radon(side=" + std::to_string(geometry_->grid().side()) +
         ",p=" + std::to_string(geometry_->num_projections()) +
         ",d=" + std::to_string(geometry_->num_detectors()) + ")";
}

namespace {
void check_dims(std::size_t got, Eigen::Index want, const char* who) {
  if (got != static_cast<std::size_t>(want))
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}
}  // namespace

MatrixOperator::MatrixOperator(Matrix h) : h_(std::move(h)) {
  if (h_.rows() < 1 || h_.cols() < 1) throw std::invalid_argument("MatrixOperator: empty matrix");
  pinv_ = h_.completeOrthogonalDecomposition().pseudoInverse();
}

void MatrixOperator::apply(std::span<const double> x, std::span<double> out) const {
  check_dims(x.size(), h_.cols(), "MatrixOperator::apply");
  check_dims(out.size(), h_.rows(), "MatrixOperator::apply");
  Eigen::Map<Vector>(out.data(), h_.rows()).noalias() =
      h_ * Eigen::Map<const Vector>(x.data(), h_.cols());
}

void MatrixOperator::apply_adjoint(std::span<const double> s, std::span<double> out) const {
  check_dims(s.size(), h_.rows(), "MatrixOperator::apply_adjoint");
  check_dims(out.size(), h_.cols(), "MatrixOperator::apply_adjoint");
  Eigen::Map<Vector>(out.data(), h_.cols()).noalias() =
      h_.transpose() * Eigen::Map<const Vector>(s.data(), h_.rows());
}

void MatrixOperator::apply_approx_inverse(std::span<const double> s, std::span<double> out) const {
  check_dims(s.size(), h_.rows(), "MatrixOperator::apply_approx_inverse");
  check_dims(out.size(), h_.cols(), "MatrixOperator::apply_approx_inverse");
  Eigen::Map<Vector>(out.data(), h_.cols()).noalias() =
      pinv_ * Eigen::Map<const Vector>(s.data(), h_.rows());
}

std::string MatrixOperator::describe() const {
  return "matrix(" + std::to_string(h_.rows()) + "x" + std::to_string(h_.cols()) + ")";
}

}  // namespace pnpeval::tomo
