#pragma once

// Variance-exploding ancestral sampler with pluggable likelihood guidance.
//
// Each guidance term approximates grad_x log p_t(y | x_t) and is added to the
// exact prior score. x0_hat = x_t + sigma_t^2 * score is Tweedie's estimate
// and J = I + sigma_t^2 * Hess its (symmetric) Jacobian.
//
//   mcg:   alpha * J H^+ (y - H x0_hat),   alpha = 0.1 / |H^+ (y - H x0_hat)|
//   dps:   alpha * J H^T (y - H x0_hat),   alpha = 1 / |y - H x0_hat|
//   pig:   J H^T (r_t^2 H H^T + sigma_y^2 I)^{-1} (y - H x0_hat)
//   exact: grad_x log sum_k pi_k(x_t) N(y; H m_k(x_t), H C_k H^T + sigma_y^2 I)

#include "pnpeval/common.hpp"
#include "pnpeval/gmm_prior.hpp"
#include "pnpeval/linear_operator.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pnpeval::guidance {

struct NoiseSchedule {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// Sampling order: sigmas.front() == sigma_max, sigmas.back() == sigma_min.
  std::vector<double> sigmas;

  int size() const { return static_cast<int>(sigmas.size()); }
};

/// sigma_i = sigma_min * (sigma_max / sigma_min)^{t_i}, t_i equispaced on [0, 1].
NoiseSchedule make_schedule(double sigma_min, double sigma_max, int num_scales);

enum class Method { none, mcg, dps, pig, exact };
enum class PseudoInverse { fbp, dense };

std::string method_name(Method m);
/// Throws std::invalid_argument for unknown names.
Method parse_method(const std::string& name);
std::string pseudo_inverse_name(PseudoInverse p);
PseudoInverse parse_pseudo_inverse(const std::string& name);

struct GuidanceConfig {
  Method method = Method::none;
  /// Multiplies the handcrafted alpha of mcg and dps. Zero switches the
  /// guidance off while keeping the method label.
  double alpha_scale = 1.0;
  double epsilon_denom = 1e-12;
  PseudoInverse mcg_pseudo_inverse = PseudoInverse::fbp;
  /// Data-consistency step x <- x + H^+ (y - H x) after every mcg update.
  bool mcg_projection = false;

  void validate() const;
};

using Evaluation = prior::GmmPrior::Evaluation;

/// r_t^2 = sigma_t^2 / (sigma_t^2 + 1).
double pig_default_variance(double sigma_t);

Vector likelihood_score_mcg(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs,
                            const GuidanceConfig& cfg);
Vector likelihood_score_dps(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs,
                            const GuidanceConfig& cfg);
Vector likelihood_score_pig(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs);
/// As above with r_t^2 supplied by the caller.
Vector likelihood_score_pig(const Evaluation& ev, const Vector& y, const tomo::ObservationModel& obs,
                            double r2);

Vector likelihood_score_mcg(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                            const Vector& y, const tomo::ObservationModel& obs,
                            const GuidanceConfig& cfg);
Vector likelihood_score_dps(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                            const Vector& y, const tomo::ObservationModel& obs,
                            const GuidanceConfig& cfg);
Vector likelihood_score_pig(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                            const Vector& y, const tomo::ObservationModel& obs);

/// How the exact likelihood is evaluated. `spectral` needs isotropic
/// components and works in the eigenbasis of H^T H; `dense` factors
/// H C_k H^T + sigma_y^2 I per component; `automatic` picks spectral when allowed.
enum class ExactRoute { automatic, spectral, dense };

struct ExactLikelihood {
  double log_likelihood = 0.0;
  Vector gradient;
};

ExactLikelihood exact_likelihood(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                                 const Vector& y, const tomo::ObservationModel& obs,
                                 ExactRoute route = ExactRoute::automatic);
Vector exact_likelihood_score(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                              const Vector& y, const tomo::ObservationModel& obs);
double exact_log_likelihood(const prior::GmmPrior& prior, const Vector& x_t, double sigma_t,
                            const Vector& y, const tomo::ObservationModel& obs);

/// Measurement summary in the eigenbasis W of H^T H: b = W^T H^T y, |y|^2.
struct SpectralMeasurement {
  Vector b;
  double yy = 0.0;
};

SpectralMeasurement spectral_measurement(const tomo::ObservationModel& obs, const Vector& y);

/// Exact likelihood in rotated coordinates xi = W^T x. `rotated_eval` must
/// come from the rotated prior (all components isotropic).
ExactLikelihood exact_likelihood_spectral(const Evaluation& rotated_eval,
                                          const prior::GmmPrior& rotated_prior,
                                          const SpectralMeasurement& meas,
                                          const tomo::ObservationModel& obs);

/// Pi-G guidance in rotated coordinates.
Vector pig_spectral(const Evaluation& rotated_eval, const SpectralMeasurement& meas,
                    const tomo::ObservationModel& obs, double r2);

struct SamplerOptions {
  /// Drop the Gaussian innovations (z = 0).
  bool deterministic = false;
  /// Disable the rotated-coordinate fast path for pig/exact.
  bool force_pixel_path = false;
  /// Called after every update with (step, sigma of the step, x in pixel
  /// coordinates).
  std::function<void(int, double, const Vector&)> observer;
};

/// One reverse chain per call:
///   x ~ N(0, sigma_max^2 I)
///   x <- x + (s_i^2 - s_{i+1}^2) s_total(x, s_i)
///          + sqrt(s_{i+1}^2 (s_i^2 - s_{i+1}^2) / s_i^2) z,   i = 0 .. K-2
///   return x + sigma_min^2 * score(x, sigma_min)
/// Immutable after construction; sample() may be called concurrently.
class PosteriorSampler {
 public:
  PosteriorSampler(const prior::GmmPrior& prior, NoiseSchedule schedule, GuidanceConfig cfg,
                   tomo::ObservationPtr obs, SamplerOptions options = {});

  const GuidanceConfig& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  bool uses_spectral_path() const { return spectral_; }

  /// `y` is required unless the method is none. Throws NumericalFailure on a
  /// non-finite state.
  Vector sample(const Vector* y, std::uint64_t seed) const;

 private:
  prior::GmmPrior prior_;
  NoiseSchedule schedule_;
  GuidanceConfig cfg_;
  tomo::ObservationPtr obs_;
  SamplerOptions options_;
  bool spectral_ = false;
  std::optional<prior::GmmPrior> rotated_;
};

Vector ancestral_sample(const prior::GmmPrior& prior, const NoiseSchedule& schedule,
                        const GuidanceConfig& cfg, const Vector* y, tomo::ObservationPtr obs,
                        std::uint64_t seed, SamplerOptions options = {});

struct ChainFailure {
  std::size_t chain = 0;
  std::string message;
};

struct BatchResult {
  /// Successful chains in chain order; indices[i] is the chain of samples[i].
  std::vector<Vector> samples;
  std::vector<std::size_t> indices;
  std::vector<ChainFailure> failures;
  double wall_seconds = 0.0;
};

/// Raised when more than 1% of the chains in a batch fail.
class BatchFailure : public NumericalFailure {
 public:
  BatchFailure(const std::string& what, BatchResult partial)
      : NumericalFailure(what), partial_(std::move(partial)) {}
  const BatchResult& partial() const { return partial_; }

 private:
  BatchResult partial_;
};

std::uint64_t chain_seed(std::uint64_t master_seed, std::size_t chain);

/// N chains with seeds chain_seed(master_seed, i). `conditions` holds no
/// sinogram (unconditional), one shared sinogram, or one per chain. Output
/// is identical for any worker count.
BatchResult batch_sample(const PosteriorSampler& sampler, const std::vector<Vector>& conditions,
                         std::size_t count, std::uint64_t master_seed, int workers = 1);

}  // namespace pnpeval::guidance
