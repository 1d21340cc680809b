#include "pnpeval/tomo.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace pnpeval::tomo {

Sinogram simulate_measurement(const Image& x, const GeometryPtr& geom, double sigma_y,
                              std::uint64_t seed) {
  if (!(sigma_y >= 0.0)) throw std::invalid_argument("simulate_measurement: sigma_y must be >= 0");
  Sinogram y = radon_forward(x, geom);
  if (sigma_y > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < y.values.size(); ++i) y.values[i] += sigma_y * normal(rng);
  }
  return y;
}

Sinogram simulate_measurement(const Image& x, const GeometryPtr& geom, const NoiseModel& noise,
                              std::uint64_t seed) {
  return simulate_measurement(x, geom, noise.sigma_y(), seed);
}

NoiseModel calibrate_sigma_y(const std::vector<Vector>& dataset, const ImageGrid& grid,
                             int num_detectors) {
  if (dataset.empty()) throw std::invalid_argument("calibrate_sigma_y: empty dataset");
  const GeometryPtr g180 = make_geometry(grid, 180, num_detectors);
  Vector sino(g180->measurement_dim());
  double total = 0.0;
  for (const Vector& x : dataset) {
    project(*g180, as_span(x), as_span(sino));
    total += sino.maxCoeff() - sino.minCoeff();
  }
  const double sigma = total / (100.0 * static_cast<double>(dataset.size()));
  if (!(sigma > 0.0))
    throw DegenerateCalibration("calibrate_sigma_y: every 180-projection sinogram is constant");
  return NoiseModel(sigma);
}

NoiseModel calibrate_sigma_y(const std::vector<Image>& dataset, const ImageGrid& grid,
                             int num_detectors) {
  std::vector<Vector> raw;
  raw.reserve(dataset.size());
  for (const Image& im : dataset) {
    if (!(im.grid == grid)) throw std::invalid_argument("calibrate_sigma_y: grid mismatch");
    raw.push_back(im.values);
  }
  return calibrate_sigma_y(raw, grid, num_detectors);
}

}  // namespace pnpeval::tomo
