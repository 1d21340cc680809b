#include "pnpeval/gmm_prior.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pnpeval::prior {

// --- Gmm1d -----------------------------------------------------------------

double Gmm1d::pdf(double x) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double z = (x - means[k]) / std::sqrt(variances[k]);
    acc += weights[k] * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi * variances[k]);
  }
  return acc;
}

double Gmm1d::cdf(double x) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double z = (x - means[k]) / std::sqrt(2.0 * variances[k]);
    acc += weights[k] * 0.5 * std::erfc(-z);
  }
  return acc;
}

double Gmm1d::mean() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) acc += weights[k] * means[k];
  return acc;
}

double Gmm1d::variance() const {
  const double mu = mean();
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k)
    acc += weights[k] * (variances[k] + (means[k] - mu) * (means[k] - mu));
  return acc;
}

double Gmm1d::stddev() const { return std::sqrt(variance()); }

// --- GmmPrior --------------------------------------------------------------

GmmPrior::GmmPrior(std::vector<double> weights, std::vector<Vector> means,
                   std::vector<Covariance> covariances)
    : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
  if (weights_.empty()) throw std::invalid_argument("GmmPrior: no components");
  if (weights_.size() != means_.size() || weights_.size() != covs_.size())
    throw std::invalid_argument("GmmPrior: weights, means and covariances differ in count");
  dim_ = static_cast<int>(means_.front().size());
  if (dim_ < 1) throw std::invalid_argument("GmmPrior: zero-dimensional means");
  double total = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!(weights_[k] > 0.0) || !std::isfinite(weights_[k]))
      throw std::invalid_argument("GmmPrior: weights must be positive");
    if (means_[k].size() != dim_ || covs_[k].dim() != dim_)
      throw std::invalid_argument("GmmPrior: components disagree in dimension");
    if (!means_[k].allFinite()) throw std::invalid_argument("GmmPrior: non-finite mean");
    total += weights_[k];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("GmmPrior: weights must sum to 1");
  for (double& w : weights_) w /= total;
  log_weights_.reserve(weights_.size());
  for (double w : weights_) log_weights_.push_back(std::log(w));
}

bool GmmPrior::all_isotropic() const {
  return std::all_of(covs_.begin(), covs_.end(), [](const Covariance& c) { return c.is_isotropic(); });
}

GmmPrior::Evaluation GmmPrior::evaluate(const Vector& x, double sigma_t) const {
  if (x.size() != dim_) throw std::invalid_argument("GmmPrior::evaluate: dimension mismatch");
  if (!(sigma_t >= 0.0)) throw std::invalid_argument("GmmPrior::evaluate: sigma_t must be >= 0");
  const double s2 = sigma_t * sigma_t;
  const auto inv_shift = [s2](double l) { return 1.0 / (l + s2); };
  const auto shift = [s2](double l) { return l + s2; };
  const double log_2pi = std::log(2.0 * std::numbers::pi);

  Evaluation ev;
  ev.prior_ = this;
  ev.x_ = x;
  ev.sigma_ = sigma_t;
  const int K = num_components();
  ev.grads_.resize(K);
  ev.log_joint_.resize(K);
  for (int k = 0; k < K; ++k) {
    const Vector diff = x - means_[k];
    Vector solved = covs_[k].apply(inv_shift, diff);
    const double quad = diff.dot(solved);
    const double log_det = covs_[k].log_det(shift);
    ev.log_joint_[k] = log_weights_[k] - 0.5 * (dim_ * log_2pi + log_det + quad);
    ev.grads_[k] = -std::move(solved);
  }
  ev.resp_ = ev.log_joint_;
  ev.log_density_ = normalize_log_weights(ev.resp_);
  ev.score_ = Vector::Zero(dim_);
  for (int k = 0; k < K; ++k) {
    if (ev.resp_[k] != 0.0) ev.score_ += ev.resp_[k] * ev.grads_[k];
  }
  return ev;
}

Vector GmmPrior::Evaluation::tweedie() const { return x_ + sigma_ * sigma_ * score_; }

Vector GmmPrior::Evaluation::hessian_vec(const Vector& v) const {
  const double s2 = sigma_ * sigma_;
  const auto inv_shift = [s2](double l) { return 1.0 / (l + s2); };
  Vector out = -score_ * score_.dot(v);
  for (std::size_t k = 0; k < resp_.size(); ++k) {
    if (resp_[k] == 0.0) continue;
    const Vector& g = grads_[k];
    out += resp_[k] * (g * g.dot(v) - prior_->covs_[k].apply(inv_shift, v));
  }
  return out;
}

Vector GmmPrior::Evaluation::tweedie_jacobian_vec(const Vector& v) const {
  if (sigma_ == 0.0) return v;
  return v + sigma_ * sigma_ * hessian_vec(v);
}

double GmmPrior::log_pt(const Vector& x, double sigma_t) const {
  return evaluate(x, sigma_t).log_density();
}

Vector GmmPrior::score_t(const Vector& x, double sigma_t) const {
  return evaluate(x, sigma_t).score();
}

Vector GmmPrior::hessian_vec_t(const Vector& x, double sigma_t, const Vector& v) const {
  if (v.size() != dim_) throw std::invalid_argument("hessian_vec_t: dimension mismatch");
  return evaluate(x, sigma_t).hessian_vec(v);
}

Vector GmmPrior::tweedie_denoise(const Vector& x_t, double sigma_t) const {
  if (sigma_t == 0.0) {
    if (x_t.size() != dim_) throw std::invalid_argument("tweedie_denoise: dimension mismatch");
    return x_t;
  }
  return evaluate(x_t, sigma_t).tweedie();
}

std::vector<Vector> GmmPrior::sample(std::size_t count, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto root = [](double l) { return std::sqrt(l); };
  std::vector<Vector> out;
  out.reserve(count);
  Vector z(dim_);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = uniform(rng);
    int k = 0;
    double cumulative = weights_[0];
    while (u >= cumulative && k + 1 < num_components()) cumulative += weights_[++k];
    for (int j = 0; j < dim_; ++j) z[j] = normal(rng);
    out.push_back(means_[k] + covs_[k].apply(root, z));
  }
  return out;
}

Vector GmmPrior::mixture_mean() const {
  Vector mu = Vector::Zero(dim_);
  for (int k = 0; k < num_components(); ++k) mu += weights_[k] * means_[k];
  return mu;
}

Matrix GmmPrior::mixture_covariance() const {
  const Vector mu = mixture_mean();
  Matrix cov = Matrix::Zero(dim_, dim_);
  for (int k = 0; k < num_components(); ++k) {
    const Vector d = means_[k] - mu;
    cov += weights_[k] * (covs_[k].dense() + d * d.transpose());
  }
  return cov;
}

double GmmPrior::std_envelope() const {
  const int K = num_components();
  double within = 0.0;
  for (const Covariance& c : covs_) within = std::max(within, c.max_eigenvalue());
  const Vector mu = mixture_mean();
  Matrix scaled(dim_, K);
  for (int k = 0; k < K; ++k) scaled.col(k) = std::sqrt(weights_[k]) * (means_[k] - mu);
  const Matrix small = scaled.transpose() * scaled;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(small, Eigen::EigenvaluesOnly);
  const double between = std::max(0.0, solver.eigenvalues().maxCoeff());
  return std::sqrt(within + between);
}

GmmPrior GmmPrior::rotated(const Matrix& basis) const {
  if (!all_isotropic()) throw std::invalid_argument("GmmPrior::rotated: components must be isotropic");
  if (basis.rows() != dim_ || basis.cols() != dim_)
    throw std::invalid_argument("GmmPrior::rotated: basis has wrong shape");
  std::vector<Vector> means;
  means.reserve(means_.size());
  for (const Vector& m : means_) means.push_back(basis.transpose() * m);
  return GmmPrior(weights_, std::move(means), covs_);
}

Gmm1d GmmPrior::marginal(int index) const {
  if (index < 0 || index >= dim_) throw std::out_of_range("GmmPrior::marginal: index out of range");
  Gmm1d out;
  for (int k = 0; k < num_components(); ++k) {
    out.weights.push_back(weights_[k]);
    out.means.push_back(means_[k][index]);
    out.variances.push_back(covs_[k].diagonal_entries()[index]);
  }
  return out;
}

GmmPrior make_prior_from_templates(const PhantomTemplateSet& templates, double variance) {
  if (templates.templates.empty())
    throw std::invalid_argument("make_prior_from_templates: empty template set");
  if (!(variance > 0.0)) throw std::invalid_argument("make_prior_from_templates: variance must be > 0");
  const std::size_t K = templates.templates.size();
  const int n = templates.grid.n();
  std::vector<double> weights(K, 1.0 / static_cast<double>(K));
  std::vector<Covariance> covs(K, Covariance::isotropic(n, variance));
  for (const Vector& t : templates.templates) {
    if (t.size() != n) throw std::invalid_argument("make_prior_from_templates: template size mismatch");
  }
  return GmmPrior(std::move(weights), templates.templates, std::move(covs));
}

std::vector<Vector> sample_prior(const GmmPrior& prior, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_prior: count must be >= 1");
  return prior.sample(count, seed);
}

}  // namespace pnpeval::prior
