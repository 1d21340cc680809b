#include "pnpeval/linear_operator.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace pnpeval::tomo {

ObservationModel::ObservationModel(OperatorPtr op, NoiseModel noise)
    : op_(std::move(op)), noise_(noise) {
  if (!op_) throw std::invalid_argument("ObservationModel: null operator");
}

const Matrix& ObservationModel::dense() const {
  std::call_once(dense_once_, [this] {
    if (const auto* m = dynamic_cast<const MatrixOperator*>(op_.get())) {
      dense_ = m->matrix();
    } else {
      dense_ = op_->dense();
    }
  });
  return dense_;
}

const Matrix& ObservationModel::gram() const {
  std::call_once(gram_once_, [this] {
    const Matrix& h = dense();
    gram_ = Matrix::Zero(h.cols(), h.cols());
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(h.transpose());
    gram_ = gram_.selfadjointView<Eigen::Lower>();
  });
  return gram_;
}

const GramSpectrum& ObservationModel::spectrum() const {
  std::call_once(spectrum_once_, [this] {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram());
    if (solver.info() != Eigen::Success)
      throw NumericalFailure("ObservationModel: eigendecomposition of H^T H failed");
    spectrum_.basis = solver.eigenvectors();
    spectrum_.eigenvalues = solver.eigenvalues().cwiseMax(0.0);
  });
  return spectrum_;
}

const Matrix& ObservationModel::pseudo_inverse() const {
  std::call_once(pinv_once_,
                 [this] { pinv_ = dense().completeOrthogonalDecomposition().pseudoInverse(); });
  return pinv_;
}

ObservationPtr make_radon_observation(const GeometryPtr& geom, const NoiseModel& noise) {
  return std::make_shared<const ObservationModel>(std::make_shared<const RadonOperator>(geom),
                                                  noise);
}

ObservationPtr make_matrix_observation(Matrix h, const NoiseModel& noise) {
  return std::make_shared<const ObservationModel>(
      std::make_shared<const MatrixOperator>(std::move(h)), noise);
}

}  // namespace pnpeval::tomo
