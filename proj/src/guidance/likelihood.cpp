#include "pnpeval/guidance.hpp"

#include <cmath>

namespace pnpeval::guidance {
namespace {

Vector residual(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs) {
  if (y.size() != obs.m()) throw std::invalid_argument("guidance: sinogram has wrong length");
  if (ev.score().size() != obs.n()) throw std::invalid_argument("guidance: image has wrong length");
  return y - obs.op().forward(ev.tweedie());
}

}  // namespace

Vector likelihood_score_mcg(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs,
                            const GuidanceConfig& cfg) {
  if (cfg.alpha_scale == 0.0) return Vector::Zero(obs.n());
  const Vector r = residual(ev, y, obs);
  const Vector lifted = cfg.mcg_pseudo_inverse == PseudoInverse::dense
                            ? Vector(obs.pseudo_inverse() * r)
                            : obs.op().approx_inverse(r);
  const double alpha = cfg.alpha_scale * 0.1 / std::max(lifted.norm(), cfg.epsilon_denom);
  return alpha * ev.tweedie_jacobian_vec(lifted);
}

Vector likelihood_score_dps(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs,
                            const GuidanceConfig& cfg) {
  if (cfg.alpha_scale == 0.0) return Vector::Zero(obs.n());
  const Vector r = residual(ev, y, obs);
  const double alpha = cfg.alpha_scale / std::max(r.norm(), cfg.epsilon_denom);
  return alpha * ev.tweedie_jacobian_vec(obs.op().adjoint(r));
}

Vector likelihood_score_pig(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs,
                            double r2) {
  // H^T (r2 H H^T + s^2 I)^{-1} = (r2 H^T H + s^2 I)^{-1} H^T, diagonal in W.
  const Vector back = obs.op().adjoint(residual(ev, y, obs));
  const tomo::GramSpectrum& spec = obs.spectrum();
  const double s2 = obs.noise().variance();
  Vector coeffs = spec.basis.transpose() * back;
  coeffs.array() /= r2 * spec.eigenvalues.array() + s2;
  const Vector solved = spec.basis * coeffs;
  if (!all_finite(solved)) throw NumericalFailure("pig: linear solve produced non-finite values");
  return ev.tweedie_jacobian_vec(solved);
}

Vector likelihood_score_pig(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs) {
  return likelihood_score_pig(ev, y, obs, pig_default_variance(ev.sigma()));
}

Vector pig_spectral(const Evaluation& rotated_eval, const SpectralMeasurement& meas,
                    const tomo::ObservationModel& obs, double r2) {
  const Vector& lambda = obs.spectrum().eigenvalues;
  const double s2 = obs.noise().variance();
  const Vector x0 = rotated_eval.tweedie();
  Vector q = (meas.b.array() - lambda.array() * x0.array()) / (r2 * lambda.array() + s2);
  return rotated_eval.tweedie_jacobian_vec(q);
}

Vector likelihood_score_mcg(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                            const Vector& y, const tomo::ObservationModel& obs,
                            const GuidanceConfig& cfg) {
  return likelihood_score_mcg(prior.evaluate(x_t, sigma_t), y, obs, cfg);
}

Vector likelihood_score_dps(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                            const Vector& y, const tomo::ObservationModel& obs,
                            const GuidanceConfig& cfg) {
  return likelihood_score_dps(prior.evaluate(x_t, sigma_t), y, obs, cfg);
}

Vector likelihood_score_pig(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                            const Vector& y, const tomo::ObservationModel& obs) {
  return likelihood_score_pig(prior.evaluate(x_t, sigma_t), y, obs);
}

}  // namespace pnpeval::guidance
