#pragma once

// Closed-form posterior of a Gaussian mixture prior under y = H x + e,
// e ~ N(0, sigma_y^2 I). Each component updates conjugately:
//
//   Sigma'_k = (Sigma_k^{-1} + H^T H / sigma_y^2)^{-1}
//   mu'_k    = Sigma'_k (Sigma_k^{-1} mu_k + H^T y / sigma_y^2)
//   w'_k    ~= w_k N(y; H mu_k, H Sigma_k H^T + sigma_y^2 I)

#include "pnpeval/common.hpp"
#include "pnpeval/gmm_prior.hpp"
#include "pnpeval/linear_operator.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pnpeval::oracle {

struct PosteriorGmm {
  prior::GmmPrior mixture;
  Vector y;
  std::string operator_description;
  double sigma_y = 0.0;
  std::vector<std::string> warnings;
};

/// Reuses per-component factors across many sinograms for one (prior, H, sigma_y).
class PosteriorOracle {
 public:
  PosteriorOracle(const prior::GmmPrior& prior, tomo::ObservationPtr obs);

  PosteriorGmm posterior(const Vector& y) const;
  const tomo::ObservationModel& observation() const { return *obs_; }

 private:
  struct Component {
    prior::Covariance post_cov;
    double post_log_det;
    double prior_log_det;
    Vector prior_precision_mean;  // Sigma_k^{-1} mu_k
    Vector projected_mean;        // H mu_k
  };

  prior::GmmPrior prior_;
  tomo::ObservationPtr obs_;
  std::vector<Component> comps_;
  std::vector<std::string> warnings_;
};

PosteriorGmm exact_posterior(const prior::GmmPrior& prior, const tomo::ObservationPtr& obs,
                             const Vector& y);

std::vector<Vector> sample_posterior(const PosteriorGmm& post, std::size_t count, std::uint64_t seed);

prior::Gmm1d pixel_marginal(const PosteriorGmm& post, int pixel_index);

void save_posterior(const std::filesystem::path& path, const PosteriorGmm& post);
nlohmann::json posterior_provenance(const PosteriorGmm& post);

// --- brute-force oracle for n <= 3 ------------------------------------------

struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  int points = 200;  // per axis
};

/// Axis-aligned box centred on the mixture mean, half-width `stds` marginal
/// standard deviations per axis.
GridSpec covering_grid(const prior::GmmPrior& prior, int points, double stds = 6.0);

/// Density values on a tensor grid, first axis slowest.
struct DiscretizedDensity {
  GridSpec spec;
  std::vector<double> values;

  int dim() const { return static_cast<int>(spec.lower.size()); }
  std::vector<double> axis(int i) const;
  Vector point(std::size_t flat_index) const;
  /// Tensor-product trapezoid rule.
  double integrate(const std::vector<double>& f) const;
  double integral() const { return integrate(values); }
};

/// Prior times likelihood on the grid, normalized by trapezoidal quadrature.
/// Throws UnsupportedDimension for n > 3.
DiscretizedDensity grid_posterior_oracle(const prior::GmmPrior& prior,
                                         const tomo::ObservationModel& obs, const Vector& y,
                                         const GridSpec& spec);

/// exp(log density) of a mixture on the grid, not renormalized.
DiscretizedDensity tabulate(const prior::GmmPrior& density, const GridSpec& spec);

/// 0.5 * integral |a - b| on a shared grid.
double total_variation(const DiscretizedDensity& a, const DiscretizedDensity& b);

}  // namespace pnpeval::oracle
