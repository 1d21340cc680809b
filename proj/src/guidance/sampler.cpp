#include "pnpeval/guidance.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace pnpeval::guidance {

PosteriorSampler::PosteriorSampler(const prior::GmmPrior& prior, NoiseSchedule schedule,
                                   GuidanceConfig cfg, tomo::ObservationPtr obs,
                                   SamplerOptions options)
    : prior_(prior),
      schedule_(std::move(schedule)),
      cfg_(cfg),
      obs_(std::move(obs)),
      options_(std::move(options)) {
  cfg_.validate();
  if (schedule_.size() < 2) throw std::invalid_argument("PosteriorSampler: schedule too short");
  if (cfg_.method != Method::none) {
    if (!obs_) throw std::invalid_argument("PosteriorSampler: guidance needs an observation model");
    if (obs_->n() != prior_.dim())
      throw std::invalid_argument("PosteriorSampler: prior and operator disagree in dimension");
  }
  spectral_ = !options_.force_pixel_path &&
              (cfg_.method == Method::pig || cfg_.method == Method::exact) && prior_.all_isotropic();
  if (spectral_) rotated_.emplace(prior_.rotated(obs_->spectrum().basis));
}

Vector PosteriorSampler::sample(const Vector* y, std::uint64_t seed) const {
  const Method method = cfg_.method;
  if (method != Method::none && (y == nullptr || y->size() != obs_->m()))
    throw std::invalid_argument("PosteriorSampler: missing or mis-sized conditioning sinogram");

  const prior::GmmPrior& P = spectral_ ? *rotated_ : prior_;
  const Matrix* W = spectral_ ? &obs_->spectrum().basis : nullptr;
  SpectralMeasurement meas;
  if (spectral_) meas = spectral_measurement(*obs_, *y);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = P.dim();
  Vector z(n);
  const auto draw = [&] {
    for (int j = 0; j < n; ++j) z[j] = normal(rng);
  };

  const auto guidance = [&](const Evaluation& ev) -> Vector {
    switch (method) {
      case Method::none:
        return Vector::Zero(n);
      case Method::mcg:
        return likelihood_score_mcg(ev, *y, *obs_, cfg_);
      case Method::dps:
        return likelihood_score_dps(ev, *y, *obs_, cfg_);
      case Method::pig:
        return spectral_ ? pig_spectral(ev, meas, *obs_, pig_default_variance(ev.sigma()))
                         : likelihood_score_pig(ev, *y, *obs_);
      case Method::exact:
      default:
        return spectral_ ? exact_likelihood_spectral(ev, P, meas, *obs_).gradient
                         : exact_likelihood(prior_, ev.point(), ev.sigma(), *y, *obs_).gradient;
    }
  };

  const auto fail = [&](int step, double sigma) {
    throw NumericalFailure("non-finite state at step " + std::to_string(step) + " (sigma=" +
                           std::to_string(sigma) + ", method " + method_name(method) + ")");
  };

  const std::vector<double>& sig = schedule_.sigmas;
  draw();
  Vector x = sig.front() * z;
  const int K = schedule_.size();
  for (int i = 0; i + 1 < K; ++i) {
    const double s2 = sig[i] * sig[i];
    const double s2_next = sig[i + 1] * sig[i + 1];
    const Evaluation ev = P.evaluate(x, sig[i]);
    Vector drift = ev.score();
    if (method != Method::none) drift += guidance(ev);
    x += (s2 - s2_next) * drift;
    if (!options_.deterministic) {
      draw();
      x += std::sqrt(s2_next * (s2 - s2_next) / s2) * z;
    }
    if (method == Method::mcg && cfg_.mcg_projection && cfg_.alpha_scale != 0.0) {
      const Vector r = *y - obs_->op().forward(x);
      x += cfg_.mcg_pseudo_inverse == PseudoInverse::dense ? Vector(obs_->pseudo_inverse() * r)
                                                           : obs_->op().approx_inverse(r);
    }
    if (!all_finite(x)) fail(i, sig[i]);
    if (options_.observer) options_.observer(i, sig[i], W ? Vector(*W * x) : x);
  }
  x = P.tweedie_denoise(x, schedule_.sigma_min);
  if (W) x = *W * x;
  if (!all_finite(x)) fail(K - 1, schedule_.sigma_min);
  if (options_.observer) options_.observer(K - 1, schedule_.sigma_min, x);
  return x;
}

Vector ancestral_sample(const prior::GmmPrior& prior, const NoiseSchedule& schedule,
                        const GuidanceConfig& cfg, const Vector* y, tomo::ObservationPtr obs,
                        std::uint64_t seed, SamplerOptions options) {
  return PosteriorSampler(prior, schedule, cfg, std::move(obs), std::move(options)).sample(y, seed);
}

std::uint64_t chain_seed(std::uint64_t master_seed, std::size_t chain) {
  return derive_seed(master_seed, string_tag("chain"), chain);
}

BatchResult batch_sample(const PosteriorSampler& sampler, const std::vector<Vector>& conditions,
                         std::size_t count, std::uint64_t master_seed, int workers) {
  if (count == 0) throw std::invalid_argument("batch_sample: N must be >= 1");
  if (!conditions.empty() && conditions.size() != 1 && conditions.size() != count)
    throw std::invalid_argument("batch_sample: need 0, 1 or N conditioning sinograms");
  if (sampler.config().method != Method::none && conditions.empty())
    throw std::invalid_argument("batch_sample: guided sampling needs conditioning sinograms");
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), count));

  const auto start = std::chrono::steady_clock::now();
  std::vector<Vector> results(count);
  std::vector<std::string> errors(count);
  std::vector<char> failed(count, 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      const Vector* y = conditions.empty() ? nullptr
                        : conditions.size() == 1 ? &conditions[0]
                                                 : &conditions[i];
      try {
        results[i] = sampler.sample(y, chain_seed(master_seed, i));
      } catch (const NumericalFailure& e) {
        failed[i] = 1;
        errors[i] = e.what();
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  BatchResult out;
  for (std::size_t i = 0; i < count; ++i) {
    if (failed[i]) {
      out.failures.push_back({i, errors[i]});
    } else {
      out.samples.push_back(std::move(results[i]));
      out.indices.push_back(i);
    }
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.failures.size() * 100 > count) {
    const std::string msg = std::to_string(out.failures.size()) + " of " + std::to_string(count) +
                            " chains failed; first: " + out.failures.front().message;
    throw BatchFailure(msg, std::move(out));
  }
  return out;
}

}  // namespace pnpeval::guidance
