#include "pnpeval/guidance.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

namespace pnpeval::guidance {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

ExactLikelihood combine(const std::vector<double>& log_terms, const std::vector<Vector>& grads) {
  std::vector<double> w = log_terms;
  ExactLikelihood out;
  out.log_likelihood = normalize_log_weights(w);
  out.gradient = Vector::Zero(grads.front().size());
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] != 0.0) out.gradient += w[k] * grads[k];
  return out;
}

ExactLikelihood exact_dense(const Evaluation& ev, const prior::GmmPrior& prior, const Vector& y,
                            const tomo::ObservationModel& obs) {
  const double s2 = ev.sigma() * ev.sigma();
  const double sy2 = obs.noise().variance();
  const Matrix& H = obs.dense();
  const Matrix Ht = H.transpose();
  const int K = prior.num_components();
  const int m = obs.m();
  const auto shrink = [s2](double l) { return l / (l + s2); };
  const auto cond_var = [s2](double l) { return l * s2 / (l + s2); };

  std::vector<double> terms(K);
  std::vector<Vector> grads(K);
  for (int k = 0; k < K; ++k) {
    const prior::Covariance& cov = prior.covariance(k);
    const Vector mk = prior.mean(k) + cov.apply(shrink, ev.point() - prior.mean(k));
    Matrix V = H * cov.apply_columns(cond_var, Ht);
    V.diagonal().array() += sy2;
    Eigen::LLT<Matrix> llt(V);
    if (llt.info() != Eigen::Success) throw NumericalFailure("exact guidance: factorization failed");
    const Vector e = y - H * mk;
    const Vector w = llt.solve(e);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double log_pi = ev.log_joint(k) - ev.log_density();
    terms[k] = log_pi - 0.5 * (m * kLog2Pi + logdet + e.dot(w));
    grads[k] = ev.component_gradient(k) - ev.score() + cov.apply(shrink, Ht * w);
  }
  return combine(terms, grads);
}

}  // namespace

SpectralMeasurement spectral_measurement(const tomo::ObservationModel& obs, const Vector& y) {
  if (y.size() != obs.m()) throw std::invalid_argument("spectral_measurement: wrong sinogram length");
  return {obs.spectrum().basis.transpose() * obs.op().adjoint(y), y.squaredNorm()};
}

ExactLikelihood exact_likelihood_spectral(const Evaluation& ev, const prior::GmmPrior& rotated,
                                          const SpectralMeasurement& meas,
                                          const tomo::ObservationModel& obs) {
  const Vector& lambda = obs.spectrum().eigenvalues;
  const double s2 = ev.sigma() * ev.sigma();
  const double sy2 = obs.noise().variance();
  const int m = obs.m();
  const int K = rotated.num_components();
  std::vector<double> terms(K);
  std::vector<Vector> grads(K);
  for (int k = 0; k < K; ++k) {
    const double c = rotated.covariance(k).isotropic_variance();
    const double a = c / (c + s2);
    const double v = c * s2 / (c + s2);
    const Vector zeta = a * ev.point() + (1.0 - a) * rotated.mean(k);
    const Eigen::ArrayXd denom = v * lambda.array() + sy2;
    const Eigen::ArrayXd u = meas.b.array() - lambda.array() * zeta.array();
    const double ee = meas.yy - 2.0 * meas.b.dot(zeta) + (lambda.array() * zeta.array().square()).sum();
    const double quad = ee / sy2 - (u.square() * v / (sy2 * denom)).sum();
    const double logdet = m * std::log(sy2) + (v * lambda.array() / sy2).log1p().sum();
    const double log_pi = ev.log_joint(k) - ev.log_density();
    terms[k] = log_pi - 0.5 * (m * kLog2Pi + logdet + quad);
    grads[k] = ev.component_gradient(k) - ev.score() + (a * u / denom).matrix();
  }
  return combine(terms, grads);
}

ExactLikelihood exact_likelihood(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                                 const Vector& y, const tomo::ObservationModel& obs,
                                 ExactRoute route) {
  if (y.size() != obs.m() || x_t.size() != obs.n() || prior.dim() != obs.n())
    throw std::invalid_argument("exact_likelihood: dimension mismatch");
  if (route == ExactRoute::automatic)
    route = prior.all_isotropic() ? ExactRoute::spectral : ExactRoute::dense;
  if (route == ExactRoute::dense) return exact_dense(prior.evaluate(x_t, sigma_t), prior, y, obs);

  if (!prior.all_isotropic())
    throw std::invalid_argument("exact_likelihood: spectral route needs isotropic components");
  const Matrix& W = obs.spectrum().basis;
  const prior::GmmPrior rotated = prior.rotated(W);
  const Vector xi = W.transpose() * x_t;
  ExactLikelihood out = exact_likelihood_spectral(rotated.evaluate(xi, sigma_t), rotated,
                                                  spectral_measurement(obs, y), obs);
  out.gradient = W * out.gradient;
  return out;
}

Vector exact_likelihood_score(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                              const Vector& y, const tomo::ObservationModel& obs) {
  return exact_likelihood(prior, x_t, sigma_t, y, obs).gradient;
}

double exact_log_likelihood(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                            const Vector& y, const tomo::ObservationModel& obs) {
  return exact_likelihood(prior, x_t, sigma_t, y, obs).log_likelihood;
}

}  // namespace pnpeval::guidance
