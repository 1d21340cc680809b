#include "pnpeval/oracle.hpp"
#include "pnpeval/prior_io.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pnpeval::oracle {
namespace {

constexpr double kConditionLimit = 1e12;

std::string condition_warning(int k, double cond) {
  std::ostringstream s;
  s << "component " << k << ": posterior precision condition estimate " << cond << " exceeds 1e12";
  return s.str();
}

}  // namespace

PosteriorOracle::PosteriorOracle(const prior::GmmPrior& prior, tomo::ObservationPtr obs)
    : prior_(prior), obs_(std::move(obs)) {
  if (!obs_) throw std::invalid_argument("PosteriorOracle: missing observation model");
  if (obs_->n() != prior_.dim())
    throw std::invalid_argument("PosteriorOracle: prior and operator disagree in dimension");
  const double sy2 = obs_->noise().variance();
  const auto inverse = [](double l) { return 1.0 / l; };
  const auto log_id = [](double l) { return l; };

  std::shared_ptr<const Matrix> shared_basis;

  for (int k = 0; k < prior_.num_components(); ++k) {
    const prior::Covariance& cov = prior_.covariance(k);
    Component c{prior::Covariance::isotropic(1, 1.0), 0.0, cov.log_det(log_id),
                cov.apply(inverse, prior_.mean(k)), obs_->op().forward(prior_.mean(k))};
    Vector precision;
    if (cov.is_isotropic()) {
      if (!shared_basis) shared_basis = std::make_shared<const Matrix>(obs_->spectrum().basis);
      precision = 1.0 / cov.isotropic_variance() + obs_->spectrum().eigenvalues.array() / sy2;
      c.post_cov = prior::Covariance::spectral(shared_basis, precision.cwiseInverse());
    } else {
      Matrix A = cov.apply_columns(inverse, Matrix::Identity(prior_.dim(), prior_.dim()));
      A = 0.5 * (A + A.transpose()) + obs_->gram() / sy2;
      Eigen::SelfAdjointEigenSolver<Matrix> solver(A);
      if (solver.info() != Eigen::Success)
        throw NumericalFailure("PosteriorOracle: eigendecomposition failed");
      precision = solver.eigenvalues();
      if (!(precision.minCoeff() > 0.0))
        throw NumericalFailure("PosteriorOracle: posterior precision is not positive definite");
      c.post_cov = prior::Covariance::spectral(std::make_shared<const Matrix>(solver.eigenvectors()),
                                               precision.cwiseInverse());
    }
    const double cond = precision.maxCoeff() / precision.minCoeff();
    if (cond > kConditionLimit) warnings_.push_back(condition_warning(k, cond));
    c.post_log_det = -precision.array().log().sum();
    comps_.push_back(std::move(c));
  }
}

PosteriorGmm PosteriorOracle::posterior(const Vector& y) const {
  if (y.size() != obs_->m()) throw std::invalid_argument("posterior: sinogram has wrong length");
  const double sy2 = obs_->noise().variance();
  const int m = obs_->m();
  const int K = prior_.num_components();
  const Vector back_y = obs_->op().adjoint(y) / sy2;
  const auto id = [](double l) { return l; };

  std::vector<Vector> means;
  std::vector<prior::Covariance> covs;
  std::vector<double> log_w(K);
  for (int k = 0; k < K; ++k) {
    const Component& c = comps_[static_cast<std::size_t>(k)];
    means.push_back(c.post_cov.apply(id, c.prior_precision_mean + back_y));
    covs.push_back(c.post_cov);
    const Vector r = y - c.projected_mean;
    const Vector back_r = obs_->op().adjoint(r);
    const double quad = r.squaredNorm() / sy2 - back_r.dot(c.post_cov.apply(id, back_r)) / (sy2 * sy2);
    log_w[k] = std::log(prior_.weight(k)) -
               0.5 * (m * std::log(2.0 * std::numbers::pi * sy2) + c.prior_log_det - c.post_log_det + quad);
  }

  PosteriorGmm out{prior_, y, obs_->op().describe(), obs_->sigma_y(), warnings_};
  const double lse = normalize_log_weights(log_w);
  if (!std::isfinite(lse)) {
    std::fill(log_w.begin(), log_w.end(), 1.0 / K);
    out.warnings.push_back("all posterior log-weights were -inf or undefined; using uniform weights");
  }
  // Guard against components whose weight underflows to exactly zero.
  double total = 0.0;
  for (double& w : log_w) {
    w = std::max(w, std::numeric_limits<double>::min());
    total += w;
  }
  for (double& w : log_w) w /= total;
  out.mixture = prior::GmmPrior(std::move(log_w), std::move(means), std::move(covs));
  return out;
}

PosteriorGmm exact_posterior(const prior::GmmPrior& prior, const tomo::ObservationPtr& obs,
                             const Vector& y) {
  return PosteriorOracle(prior, obs).posterior(y);
}

std::vector<Vector> sample_posterior(const PosteriorGmm& post, std::size_t count, std::uint64_t seed) {
  return post.mixture.sample(count, seed);
}

prior::Gmm1d pixel_marginal(const PosteriorGmm& post, int pixel_index) {
  return post.mixture.marginal(pixel_index);
}

nlohmann::json posterior_provenance(const PosteriorGmm& post) {
  return {{"y", prior::encode_f64_base64(post.y.data(), static_cast<std::size_t>(post.y.size()))},
          {"operator", post.operator_description},
          {"sigma_y", post.sigma_y},
          {"warnings", post.warnings}};
}

void save_posterior(const std::filesystem::path& path, const PosteriorGmm& post) {
  prior::save_prior(path, post.mixture, posterior_provenance(post));
}

}  // namespace pnpeval::oracle
