#include "pnpeval/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace pnpeval::metrics {
namespace {

constexpr double kShrinkage = 1e-6;

Matrix psd_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (s + s.transpose()));
  if (solver.info() != Eigen::Success) throw NumericalFailure("frechet: eigendecomposition failed");
  const Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
}

double trace_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalFailure("frechet: eigendecomposition failed");
  return solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace

GaussianFit fit_gaussian(const std::vector<Vector>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("fit_gaussian: need at least 2 samples");
  const Eigen::Index n = samples.front().size();
  const auto N = static_cast<Eigen::Index>(samples.size());
  Matrix x(n, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    if (samples[static_cast<std::size_t>(i)].size() != n)
      throw std::invalid_argument("fit_gaussian: samples differ in dimension");
    x.col(i) = samples[static_cast<std::size_t>(i)];
  }
  GaussianFit fit;
  fit.mean = x.rowwise().mean();
  x.colwise() -= fit.mean;
  fit.cov = Matrix::Zero(n, n);
  fit.cov.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / static_cast<double>(N - 1));
  fit.cov = fit.cov.selfadjointView<Eigen::Lower>();
  if (N <= n) fit.cov.diagonal().array() += kShrinkage;
  return fit;
}

double frechet_gaussian(const GaussianFit& a, const GaussianFit& b) {
  return FrechetReference(a).distance(b);
}

double frechet_gaussian(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  return frechet_gaussian(fit_gaussian(a), fit_gaussian(b));
}

FrechetReference::FrechetReference(const GaussianFit& reference)
    : ref_(reference), sqrt_cov_(psd_sqrt(reference.cov)), trace_(reference.cov.trace()) {}

FrechetReference::FrechetReference(const std::vector<Vector>& reference)
    : FrechetReference(fit_gaussian(reference)) {}

double FrechetReference::distance(const GaussianFit& other) const {
  if (other.mean.size() != ref_.mean.size())
    throw std::invalid_argument("frechet: sets differ in dimension");
  const Matrix middle = sqrt_cov_ * other.cov * sqrt_cov_;
  const double d = (ref_.mean - other.mean).squaredNorm() + trace_ + other.cov.trace() -
                   2.0 * trace_sqrt(middle);
  return std::max(0.0, d);
}

double FrechetReference::distance(const std::vector<Vector>& other) const {
  return distance(fit_gaussian(other));
}

}  // namespace pnpeval::metrics
