#pragma once

// Analytic Gaussian-mixture prior. Under the variance-exploding perturbation
// kernel N(x, sigma_t^2 I) the mixture stays a mixture (each covariance gains
// sigma_t^2 I), so p_t, its score, its Hessian and the Tweedie denoiser are
// all available in closed form.

#include "pnpeval/common.hpp"
#include "pnpeval/covariance.hpp"
#include "pnpeval/tomo.hpp"

#include <cstdint>
#include <vector>

namespace pnpeval::prior {

/// One-dimensional Gaussian mixture (e.g. a pixel marginal).
struct Gmm1d {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  double pdf(double x) const;
  double cdf(double x) const;
  double mean() const;
  double variance() const;
  double stddev() const;
};

class GmmPrior {
 public:
  GmmPrior(std::vector<double> weights, std::vector<Vector> means,
           std::vector<Covariance> covariances);

  int dim() const { return dim_; }
  int num_components() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  double weight(int k) const { return weights_[k]; }
  const Vector& mean(int k) const { return means_[k]; }
  const Covariance& covariance(int k) const { return covs_[k]; }
  bool all_isotropic() const;

  /// Everything the samplers need about p_t at one point, computed once.
  class Evaluation {
   public:
    const Vector& point() const { return x_; }
    double sigma() const { return sigma_; }
    double log_density() const { return log_density_; }
    /// pi_k(x): posterior component probabilities under p_t.
    const std::vector<double>& responsibilities() const { return resp_; }
    /// log w_k + log N(x; mu_k, Sigma_k + sigma^2 I)
    double log_joint(int k) const { return log_joint_[k]; }
    /// -(Sigma_k + sigma^2 I)^{-1} (x - mu_k)
    const Vector& component_gradient(int k) const { return grads_[k]; }
    const Vector& score() const { return score_; }
    /// x + sigma^2 * score
    Vector tweedie() const;
    /// Hessian of log p_t at x applied to v.
    Vector hessian_vec(const Vector& v) const;
    /// (I + sigma^2 Hess) v, the Jacobian of the Tweedie denoiser.
    Vector tweedie_jacobian_vec(const Vector& v) const;

   private:
    friend class GmmPrior;
    const GmmPrior* prior_ = nullptr;
    Vector x_;
    double sigma_ = 0.0;
    double log_density_ = 0.0;
    std::vector<double> resp_;
    std::vector<double> log_joint_;
    std::vector<Vector> grads_;
    Vector score_;
  };

  Evaluation evaluate(const Vector& x, double sigma_t) const;

  double log_pt(const Vector& x, double sigma_t) const;
  Vector score_t(const Vector& x, double sigma_t) const;
  Vector hessian_vec_t(const Vector& x, double sigma_t, const Vector& v) const;
  Vector tweedie_denoise(const Vector& x_t, double sigma_t) const;

  /// i.i.d. draws: component k with probability w_k, then a Gaussian draw.
  std::vector<Vector> sample(std::size_t count, std::uint64_t seed) const;

  Vector mixture_mean() const;
  Matrix mixture_covariance() const;
  /// sqrt(max_k lambda_max(Sigma_k) + lambda_max(between-component scatter)),
  /// an upper bound on the largest standard deviation of the mixture.
  double std_envelope() const;

  /// Same mixture expressed in coordinates xi = basis^T x. Only defined for
  /// isotropic components, which are invariant under the rotation.
  GmmPrior rotated(const Matrix& basis) const;

  /// Marginal of coordinate `index`.
  Gmm1d marginal(int index) const;

 private:
  int dim_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<Vector> means_;
  std::vector<Covariance> covs_;
};

/// Procedural stand-in for a training set: images on one grid, values in [0,1].
struct PhantomTemplateSet {
  tomo::ImageGrid grid;
  std::vector<Vector> templates;
};

/// Random ellipses plus anisotropic Gaussian blobs, clipped to [0,1].
/// Deterministic per seed.
PhantomTemplateSet make_phantoms(const tomo::ImageGrid& grid, int count, std::uint64_t seed);

/// Uniform weights, means = templates, covariances = variance * I.
GmmPrior make_prior_from_templates(const PhantomTemplateSet& templates, double variance);

std::vector<Vector> sample_prior(const GmmPrior& prior, std::size_t count, std::uint64_t seed);

}  // namespace pnpeval::prior
