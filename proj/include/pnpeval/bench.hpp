#pragma once

// Experiment orchestration: prior -> prior set X -> sinograms Y_p -> guided
// posterior batches -> NMC / PPS reports.

#include "pnpeval/common.hpp"
#include "pnpeval/gmm_prior.hpp"
#include "pnpeval/guidance.hpp"
#include "pnpeval/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnpeval::bench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a command cannot produce its main result (exit code 3).
class ComputeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PriorSpec {
  int templates = 3;
  double variance = 0.01;
  std::uint64_t template_seed = 7;
  /// Load the prior from a JSON file instead of generating templates.
  std::string file;
};

struct ExperimentConfig {
  int side = 32;
  double pixel_size = 1.0;
  int detectors = 0;  // 0 = default_detector_count(side)
  std::vector<int> projections{1, 3, 6, 12, 18, 30, 90, 180};
  std::vector<guidance::Method> methods{guidance::Method::mcg, guidance::Method::dps,
                                        guidance::Method::pig, guidance::Method::exact};
  std::size_t N = 2000;
  int K = 100;
  double sigma_min = 0.01;
  /// Unset: 10 x the prior's standard deviation envelope.
  std::optional<double> sigma_max;
  PriorSpec prior;
  std::uint64_t seed = 20240601;
  std::map<std::string, double> alpha_scale;
  double epsilon_denom = 1e-12;
  guidance::PseudoInverse mcg_pseudo_inverse = guidance::PseudoInverse::fbp;
  bool mcg_projection = false;
  /// Pi-G cells run only while p * d stays at or below this cap.
  int pig_max_measurements = 900;
  int workers = 1;
  int mmd_permutations = 200;
  bool save_samples = true;
  std::string output_dir = "out";
  std::string run_id = "default";
  // sweep-alpha / histograms
  std::size_t sweep_N = 500;
  std::size_t histogram_samples = 10000;
  int histogram_bins = 100;

  double alpha_for(guidance::Method m) const;
  int detector_count() const;
};

/// Throws ConfigError with a readable message.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& cfg);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Output root: $BENCH_OUT if set, else cfg.output_dir; run directory appends run_id.
std::filesystem::path run_directory(const ExperimentConfig& cfg);

/// Prior described by the config (templates or file).
prior::GmmPrior build_prior(const ExperimentConfig& cfg);
double resolved_sigma_max(const ExperimentConfig& cfg, const prior::GmmPrior& prior);

std::uint64_t cell_seed(std::uint64_t master, guidance::Method method, int p);

struct RunSummary {
  std::vector<metrics::EvalReport> rows;
  double sigma_y = 0.0;
  double sigma_max = 0.0;
  double fd_shift_control = 0.0;
  nlohmann::json observations;
  std::filesystem::path directory;
};

/// Writes report.csv, report.json, manifest.json and samples/ under
/// run_directory(cfg) when `write` is set.
RunSummary run_benchmark(const ExperimentConfig& cfg, bool write = true);

struct SweepRow {
  double alpha_scale;
  metrics::EvalReport report;
};

/// One cell per alpha value at N = cfg.sweep_N, sorted by |nmc - 1|.
std::vector<SweepRow> sweep_alpha(const ExperimentConfig& cfg, guidance::Method method, int p,
                                  const std::vector<double>& alpha_grid, bool write = true);

struct HistogramResult {
  int p;
  int pixel;
  metrics::Histogram histogram;
  std::optional<prior::Gmm1d> oracle;
  double w1 = 0.0;
  double oracle_std = 0.0;
};

/// Fig. 1 style marginals for one fixed conditioning sinogram per p.
std::vector<HistogramResult> export_histograms(const ExperimentConfig& cfg, guidance::Method method,
                                               const std::vector<int>& projections,
                                               const std::vector<int>& pixels,
                                               std::size_t num_samples, bool write = true);

/// Writes the template set as image tensors plus the prior JSON.
std::filesystem::path export_phantoms(const ExperimentConfig& cfg);

}  // namespace pnpeval::bench
