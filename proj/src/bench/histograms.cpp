#include "pnpeval/bench.hpp"
#include "pnpeval/oracle.hpp"
#include "pnpeval/prior_io.hpp"
#include "pnpeval/tensor_io.hpp"
#include "pnpeval/tomo.hpp"

#include <fstream>

namespace pnpeval::bench {

using nlohmann::json;

std::vector<HistogramResult> export_histograms(const ExperimentConfig& cfg, guidance::Method method,
                                               const std::vector<int>& projections,
                                               const std::vector<int>& pixels,
                                               std::size_t num_samples, bool write) {
  if (pixels.empty()) throw std::invalid_argument("export_histograms: empty pixel list");
  if (projections.empty()) throw std::invalid_argument("export_histograms: empty projection list");
  if (method == guidance::Method::none) throw std::invalid_argument("export_histograms: method 'none'");
  if (num_samples < 2) throw std::invalid_argument("export_histograms: need at least 2 samples");
  validate(cfg);
  const int n = cfg.side * cfg.side;
  for (int px : pixels)
    if (px < 0 || px >= n) throw std::out_of_range("export_histograms: pixel index out of range");

  const prior::GmmPrior prior = build_prior(cfg);
  const tomo::ImageGrid grid(cfg.side, cfg.pixel_size);
  const std::vector<Vector> X =
      prior::sample_prior(prior, cfg.N, derive_seed(cfg.seed, string_tag("prior-samples")));
  const tomo::NoiseModel noise = tomo::calibrate_sigma_y(X, grid, cfg.detector_count());
  const guidance::NoiseSchedule schedule =
      guidance::make_schedule(cfg.sigma_min, resolved_sigma_max(cfg, prior), cfg.K);
  const Vector truth = prior::sample_prior(prior, 1, derive_seed(cfg.seed, string_tag("histogram-truth")))[0];

  guidance::GuidanceConfig gcfg;
  gcfg.method = method;
  gcfg.alpha_scale = cfg.alpha_for(method);
  gcfg.epsilon_denom = cfg.epsilon_denom;
  gcfg.mcg_pseudo_inverse = cfg.mcg_pseudo_inverse;
  gcfg.mcg_projection = cfg.mcg_projection;

  const auto dir = run_directory(cfg) / "histograms";
  if (write) std::filesystem::create_directories(dir);
  std::vector<HistogramResult> results;
  for (int p : projections) {
    const auto geom = tomo::make_geometry(grid, p, cfg.detector_count());
    const auto obs = tomo::make_radon_observation(geom, noise);
    const tomo::Sinogram y = tomo::simulate_measurement(
        tomo::Image{grid, truth}, geom, noise,
        derive_seed(cfg.seed, string_tag("histogram-noise"), static_cast<std::uint64_t>(p)));
    const guidance::PosteriorSampler sampler(prior, schedule, gcfg, obs);
    const guidance::BatchResult batch = guidance::batch_sample(
        sampler, {y.values}, num_samples,
        derive_seed(cfg.seed, string_tag("histogram-chains/" + guidance::method_name(method)),
                    static_cast<std::uint64_t>(p)),
        cfg.workers);
    const oracle::PosteriorGmm post = oracle::exact_posterior(prior, obs, y.values);

    for (int px : pixels) {
      HistogramResult hr{p, px, metrics::pixel_histogram(batch.samples, px, cfg.histogram_bins),
                         oracle::pixel_marginal(post, px), 0.0, 0.0};
      hr.w1 = metrics::wasserstein1(hr.histogram, *hr.oracle);
      hr.oracle_std = hr.oracle->stddev();
      if (write) {
        const std::string stem =
            guidance::method_name(method) + "_p" + std::to_string(p) + "_px" + std::to_string(px);
        std::ofstream h(dir / (stem + ".csv"));
        h << "bin_lo,bin_hi,mass,density\n";
        for (int b = 0; b < hr.histogram.bins(); ++b) {
          const double lo = hr.histogram.edges[static_cast<std::size_t>(b)];
          const double hi = hr.histogram.edges[static_cast<std::size_t>(b) + 1];
          const double mass = hr.histogram.mass[static_cast<std::size_t>(b)];
          h << metrics::format_number(lo) << ',' << metrics::format_number(hi) << ','
            << metrics::format_number(mass) << ',' << metrics::format_number(mass / (hi - lo)) << '\n';
        }
        std::ofstream o(dir / (stem + "_oracle.csv"));
        o << "x,pdf\n";
        const double lo = std::min(hr.histogram.edges.front(), hr.oracle->mean() - 4.0 * hr.oracle_std);
        const double hi = std::max(hr.histogram.edges.back(), hr.oracle->mean() + 4.0 * hr.oracle_std);
        constexpr int kPoints = 400;
        for (int i = 0; i < kPoints; ++i) {
          const double x = lo + (hi - lo) * i / (kPoints - 1);
          o << metrics::format_number(x) << ',' << metrics::format_number(hr.oracle->pdf(x)) << '\n';
        }
        const json side{{"method", guidance::method_name(method)},
                        {"p", p},
                        {"pixel", px},
                        {"samples", batch.samples.size()},
                        {"failures", batch.failures.size()},
                        {"w1", hr.w1},
                        {"oracle_mean", hr.oracle->mean()},
                        {"oracle_std", hr.oracle_std},
                        {"w1_over_std", hr.w1 / hr.oracle_std},
                        {"sigma_y", noise.sigma_y()}};
        std::ofstream j(dir / (stem + "_w1.json"));
        j << side.dump(2) << '\n';
      }
      results.push_back(std::move(hr));
    }
  }
  return results;
}

std::filesystem::path export_phantoms(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto dir = run_directory(cfg) / "phantoms";
  std::filesystem::create_directories(dir);
  const prior::GmmPrior prior = build_prior(cfg);
  const tomo::ImageGrid grid(cfg.side, cfg.pixel_size);
  for (int k = 0; k < prior.num_components(); ++k)
    io::save_tensor(dir / ("template_" + std::to_string(k) + ".bin"),
                    io::image_tensor(tomo::Image{grid, prior.mean(k)}));
  prior::save_prior(dir / "prior.json", prior, json{{"source", cfg.prior.file.empty() ? "templates" : cfg.prior.file}});
  return dir;
}

}  // namespace pnpeval::bench
