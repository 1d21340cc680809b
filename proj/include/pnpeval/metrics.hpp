#pragma once

// Posterior evaluation: measurement consistency (NMC), posterior-prior
// similarity via kernel MMD and the Gaussian-Frechet distance, and 1D
// marginal comparisons.

#include "pnpeval/common.hpp"
#include "pnpeval/gmm_prior.hpp"
#include "pnpeval/linear_operator.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pnpeval::metrics {

/// sum_i |y_i - H x_i|^2 / (N m sigma_y^2) over paired lists.
double nmc(const std::vector<Vector>& samples, const std::vector<Vector>& sinograms,
           const tomo::ObservationModel& obs);
double nmc(const std::vector<Vector>& samples, const std::vector<Vector>& sinograms,
           const tomo::LinearOperator& op, double sigma_y);

// --- MMD ----------------------------------------------------------------------

enum class KernelKind { rbf, linear };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  /// RBF length scale h in exp(-|a-b|^2 / (2 h^2)); median heuristic if unset.
  std::optional<double> bandwidth;
};

struct MmdOptions {
  int permutations = 200;
  std::uint64_t seed = 0x6d6d64;
  /// Pooled points used for the median heuristic.
  std::size_t median_subsample = 1000;
  int workers = 1;
};

struct MmdResult {
  double estimate = 0.0;  // unbiased squared MMD
  double null95 = 0.0;
  double null99 = 0.0;
  double p_value = 1.0;
  double bandwidth = 0.0;  // 0 for the linear kernel
  int permutations = 0;
};

/// Unbiased U-statistic with a label-permutation null. Needs |A|, |B| >= 2.
MmdResult mmd2(const std::vector<Vector>& a, const std::vector<Vector>& b, const KernelSpec& kernel = {},
               const MmdOptions& options = {});

/// Biased (V-statistic) squared MMD with the linear kernel: |mean(A) - mean(B)|^2.
double mmd2_linear_biased(const std::vector<Vector>& a, const std::vector<Vector>& b);

/// Median pairwise Euclidean distance over a seeded pooled subsample.
double median_heuristic(const std::vector<Vector>& a, const std::vector<Vector>& b,
                        std::size_t subsample, std::uint64_t seed);

// --- Gaussian-Frechet -----------------------------------------------------------

struct GaussianFit {
  Vector mean;
  Matrix cov;
};

/// Sample mean and unbiased covariance; adds 1e-6 I when N <= n.
GaussianFit fit_gaussian(const std::vector<Vector>& samples);

/// |mu_A - mu_B|^2 + tr(S_A + S_B - 2 (S_A^{1/2} S_B S_A^{1/2})^{1/2}),
/// negative eigenvalues clamped at 0, result clamped at 0.
double frechet_gaussian(const GaussianFit& a, const GaussianFit& b);
double frechet_gaussian(const std::vector<Vector>& a, const std::vector<Vector>& b);

/// Caches the fit and covariance square root of a fixed reference set.
class FrechetReference {
 public:
  explicit FrechetReference(const GaussianFit& reference);
  explicit FrechetReference(const std::vector<Vector>& reference);

  double distance(const GaussianFit& other) const;
  double distance(const std::vector<Vector>& other) const;

 private:
  GaussianFit ref_;
  Matrix sqrt_cov_;
  double trace_;
};

// --- histograms and 1D Wasserstein ----------------------------------------------

/// Mass per bin (sums to 1), uniform within each bin for CDF purposes.
struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<double> mass;   // bins

  int bins() const { return static_cast<int>(mass.size()); }
  double cdf(double x) const;
};

/// Range [min, max] of the values; constant data uses [v - 0.5, v + 0.5].
Histogram histogram(const std::vector<double>& values, int bins);
Histogram histogram(const std::vector<double>& values, int bins, double lo, double hi);
Histogram pixel_histogram(const std::vector<Vector>& samples, int pixel_index, int bins);

/// Integral of |F_A - F_B|, exact for piecewise-linear CDFs.
double wasserstein1(const Histogram& a, const Histogram& b);
/// Histogram against an analytic mixture; Gaussian tails integrated in closed form.
double wasserstein1(const Histogram& a, const prior::Gmm1d& b);
/// Exact distance between two empirical distributions.
double wasserstein1_samples(std::vector<double> a, std::vector<double> b);

// --- reports ----------------------------------------------------------------------

struct EvalReport {
  std::string method;
  int p = 0;
  std::size_t N = 0;
  /// "ok", "skipped" or "failed".
  std::string status = "ok";
  double nmc = 0.0;
  double pps_mmd = 0.0;
  double pps_mmd_null95 = 0.0;
  double pps_mmd_p_value = 1.0;
  double pps_fd = 0.0;
  double runtime_seconds = 0.0;
  std::size_t failure_count = 0;
  std::string message;
};

/// method,p,N,nmc,pps_mmd,pps_mmd_null95,pps_fd,runtime_s,failures
std::string csv_header();
std::string csv_row(const EvalReport& r);
nlohmann::json to_json(const EvalReport& r);
/// Compact fixed-format number used in CSV output.
std::string format_number(double v);

}  // namespace pnpeval::metrics
