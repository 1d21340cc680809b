// Command-line front end for the posterior-sampling benchmark.

#include "pnpeval/bench.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace pnpeval;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kComputeFailure = 3;

bench::ExperimentConfig load(const std::string& path, int workers, const std::string& run_id) {
  bench::ExperimentConfig cfg = bench::load_config(path);
  if (workers > 0) cfg.workers = workers;
  if (!run_id.empty()) cfg.run_id = run_id;
  bench::validate(cfg);
  return cfg;
}

void print_rows(const std::vector<metrics::EvalReport>& rows) {
  std::cout << metrics::csv_header() << '\n';
  for (const auto& r : rows) std::cout << metrics::csv_row(r) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posterior evaluation benchmark for plug-and-play diffusion samplers in sparse-view CT"};
  app.require_subcommand(1);

  std::string config_path, run_id, method_name;
  int workers = 0;
  int p = 0;
  std::vector<int> ps;
  std::vector<int> pixels;
  std::vector<double> grid;
  std::size_t samples = 0;

  auto* run = app.add_subcommand("run", "Run every (method, p) cell and write reports");
  run->add_option("config", config_path, "Config file (JSON)")->required();
  run->add_option("--workers", workers, "Parallel chains");
  run->add_option("--run-id", run_id, "Override run_id");

  auto* sweep = app.add_subcommand("sweep-alpha", "Sweep alpha_scale for one (method, p) cell");
  sweep->add_option("config", config_path, "Config file (JSON)")->required();
  sweep->add_option("--method", method_name, "mcg or dps")->required();
  sweep->add_option("--p", p, "Number of projections")->required();
  sweep->add_option("--grid", grid, "alpha_scale values")->required()->delimiter(',');
  sweep->add_option("--workers", workers, "Parallel chains");
  sweep->add_option("--run-id", run_id, "Override run_id");

  auto* hist = app.add_subcommand("histograms", "Export pixel-marginal histograms and oracle curves");
  hist->add_option("config", config_path, "Config file (JSON)")->required();
  hist->add_option("--method", method_name, "Guidance method")->required();
  hist->add_option("--p", ps, "Projection counts")->required()->delimiter(',');
  hist->add_option("--pixels", pixels, "Pixel indices")->required()->delimiter(',');
  hist->add_option("--samples", samples, "Samples per p (default: histogram_samples)");
  hist->add_option("--workers", workers, "Parallel chains");
  hist->add_option("--run-id", run_id, "Override run_id");

  auto* phantoms = app.add_subcommand("phantoms", "Write the template set and prior");
  phantoms->add_option("config", config_path, "Config file (JSON)")->required();
  phantoms->add_option("--run-id", run_id, "Override run_id");

  auto* check = app.add_subcommand("validate", "Validate a config file");
  check->add_option("config", config_path, "Config file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*check) {
      const auto cfg = load(config_path, 0, "");
      std::cout << "config ok: " << bench::config_to_json(cfg).dump() << '\n';
      return kOk;
    }
    if (*phantoms) {
      const auto cfg = load(config_path, 0, run_id);
      std::cout << "wrote " << bench::export_phantoms(cfg).string() << '\n';
      return kOk;
    }
    if (*run) {
      const auto cfg = load(config_path, workers, run_id);
      const bench::RunSummary summary = bench::run_benchmark(cfg);
      print_rows(summary.rows);
      std::cout << "sigma_y = " << summary.sigma_y << ", sigma_max = " << summary.sigma_max
                << "\nreports in " << summary.directory.string() << '\n';
      for (const auto& r : summary.rows)
        if (r.status == "failed") {
          std::cerr << "cell " << r.method << " p=" << r.p << " failed: " << r.message << '\n';
          return kComputeFailure;
        }
      return kOk;
    }
    if (*sweep) {
      const auto cfg = load(config_path, workers, run_id);
      const auto rows = bench::sweep_alpha(cfg, guidance::parse_method(method_name), p, grid);
      std::cout << "alpha_scale,nmc,pps_mmd,pps_fd,status\n";
      for (const auto& r : rows)
        std::cout << metrics::format_number(r.alpha_scale) << ',' << metrics::format_number(r.report.nmc)
                  << ',' << metrics::format_number(r.report.pps_mmd) << ','
                  << metrics::format_number(r.report.pps_fd) << ',' << r.report.status << '\n';
      for (const auto& r : rows)
        if (r.report.status == "failed") return kComputeFailure;
      return kOk;
    }
    if (*hist) {
      const auto cfg = load(config_path, workers, run_id);
      const auto results = bench::export_histograms(cfg, guidance::parse_method(method_name), ps, pixels,
                                                    samples > 0 ? samples : cfg.histogram_samples);
      std::cout << "p,pixel,w1,oracle_std,w1_over_std\n";
      for (const auto& r : results)
        std::cout << r.p << ',' << r.pixel << ',' << metrics::format_number(r.w1) << ','
                  << metrics::format_number(r.oracle_std) << ','
                  << metrics::format_number(r.w1 / r.oracle_std) << '\n';
      return kOk;
    }
  } catch (const bench::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "compute failure: " << e.what() << '\n';
    return kComputeFailure;
  }
  return kOk;
}
