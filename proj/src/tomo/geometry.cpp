#include "pnpeval/tomo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pnpeval::tomo {

ImageGrid::ImageGrid(int side, double pixel_size) : side_(side), pixel_size_(pixel_size) {
  if (side < 2) throw std::invalid_argument("ImageGrid: side must be >= 2, got " + std::to_string(side));
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
    throw std::invalid_argument("ImageGrid: pixel_size must be positive");
}

int default_detector_count(int side) {
  return static_cast<int>(std::ceil(side * std::numbers::sqrt2)) + 1;
}

RadonGeometry::RadonGeometry(const ImageGrid& grid, std::vector<double> angles, int detectors)
    : grid_(grid), angles_(std::move(angles)), detectors_(detectors) {
  cos_.reserve(angles_.size());
  sin_.reserve(angles_.size());
  for (double a : angles_) {
    cos_.push_back(std::cos(a));
    sin_.push_back(std::sin(a));
  }
  const double diameter = grid_.side() * grid_.pixel_size() * std::numbers::sqrt2;
  spacing_ = detectors_ > 1 ? diameter / (detectors_ - 1) : diameter;
}

GeometryPtr make_geometry(const ImageGrid& grid, int num_projections, int num_detectors) {
  if (num_projections < 1) throw std::invalid_argument("make_geometry: p must be >= 1");
  if (num_detectors < 1) throw std::invalid_argument("make_geometry: d must be >= 1");
  std::vector<double> angles(num_projections);
  for (int j = 0; j < num_projections; ++j) angles[j] = j * std::numbers::pi / num_projections;
  return make_geometry(grid, std::move(angles), num_detectors);
}

GeometryPtr make_geometry(const ImageGrid& grid, std::vector<double> angles, int num_detectors) {
  if (angles.empty()) throw std::invalid_argument("make_geometry: p must be >= 1");
  if (num_detectors < 1) throw std::invalid_argument("make_geometry: d must be >= 1");
  for (std::size_t j = 0; j < angles.size(); ++j) {
    if (!(angles[j] >= 0.0 && angles[j] < std::numbers::pi))
      throw std::invalid_argument("make_geometry: angles must lie in [0, pi)");
    if (j > 0 && !(angles[j] > angles[j - 1]))
      throw std::invalid_argument("make_geometry: angles must be strictly increasing");
  }
  return GeometryPtr(new RadonGeometry(grid, std::move(angles), num_detectors));
}

NoiseModel::NoiseModel(double sigma_y) : sigma_y_(sigma_y) {
  if (!(sigma_y > 0.0) || !std::isfinite(sigma_y))
    throw std::invalid_argument("NoiseModel: sigma_y must be positive and finite");
}

}  // namespace pnpeval::tomo
