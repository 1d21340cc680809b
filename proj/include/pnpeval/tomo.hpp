#pragma once

// Parallel-beam tomography: discretized Radon transform (Joseph's method),
// its exact adjoint, filtered back-projection, and measurement simulation.

#include "pnpeval/common.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace pnpeval::tomo {

/// Square pixel grid. Pixel (row i, col j) is stored at i * side + j; its
/// center sits at ((j - c) h, (c - i) h) with c = (side - 1) / 2.
class ImageGrid {
 public:
  explicit ImageGrid(int side, double pixel_size = 1.0);

  int side() const { return side_; }
  double pixel_size() const { return pixel_size_; }
  int n() const { return side_ * side_; }

  bool operator==(const ImageGrid&) const = default;

 private:
  int side_;
  double pixel_size_;
};

/// ceil(side * sqrt(2)) + 1: enough detectors to cover the grid diagonal.
int default_detector_count(int side);

class RadonGeometry;
using GeometryPtr = std::shared_ptr<const RadonGeometry>;

/// Immutable description of H_p. Detector offsets are centered on the
/// rotation axis and evenly spaced so the array spans the circumscribed
/// circle of the grid.
class RadonGeometry {
 public:
  const ImageGrid& grid() const { return grid_; }
  int num_projections() const { return static_cast<int>(angles_.size()); }
  int num_detectors() const { return detectors_; }
  int measurement_dim() const { return num_projections() * detectors_; }
  const std::vector<double>& angles() const { return angles_; }
  double detector_spacing() const { return spacing_; }
  double detector_offset(int k) const { return (k - 0.5 * (detectors_ - 1)) * spacing_; }
  double cos_angle(int j) const { return cos_[j]; }
  double sin_angle(int j) const { return sin_[j]; }

 private:
  friend GeometryPtr make_geometry(const ImageGrid&, std::vector<double>, int);
  RadonGeometry(const ImageGrid& grid, std::vector<double> angles, int detectors);

  ImageGrid grid_;
  std::vector<double> angles_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  int detectors_;
  double spacing_;
};

/// Equispaced angles theta_j = j * pi / p.
GeometryPtr make_geometry(const ImageGrid& grid, int num_projections, int num_detectors);
/// Explicit angles; must be strictly increasing in [0, pi).
GeometryPtr make_geometry(const ImageGrid& grid, std::vector<double> angles, int num_detectors);

struct Image {
  ImageGrid grid;
  Vector values;
};

/// Projection-major: all detectors of angle 0, then angle 1, ...
struct Sinogram {
  GeometryPtr geometry;
  Vector values;
};

class NoiseModel {
 public:
  explicit NoiseModel(double sigma_y);
  double sigma_y() const { return sigma_y_; }
  double variance() const { return sigma_y_ * sigma_y_; }

 private:
  double sigma_y_;
};

// Raw kernels. `image` has grid.n() entries, `sino` has measurement_dim().
void project(const RadonGeometry& geom, std::span<const double> image, std::span<double> sino);
void backproject(const RadonGeometry& geom, std::span<const double> sino, std::span<double> image);
void filtered_backproject(const RadonGeometry& geom, std::span<const double> sino,
                          std::span<double> image);

Sinogram radon_forward(const Image& x, const GeometryPtr& geom);
Image radon_adjoint(const Sinogram& s);
Image fbp(const Sinogram& s);

/// Ram-Lak kernel taps h[0..len) for detector spacing `spacing` (band-limited
/// ramp in the spatial domain).
std::vector<double> ramp_kernel(int len, double spacing);

/// y = H x + eps, eps ~ N(0, sigma_y^2 I). `sigma_y` may be zero here.
Sinogram simulate_measurement(const Image& x, const GeometryPtr& geom, double sigma_y,
                              std::uint64_t seed);
Sinogram simulate_measurement(const Image& x, const GeometryPtr& geom, const NoiseModel& noise,
                              std::uint64_t seed);

/// sigma_y = mean over the dataset of (max - min) of the 180-projection
/// sinogram, divided by 100.
NoiseModel calibrate_sigma_y(const std::vector<Image>& dataset, const ImageGrid& grid,
                             int num_detectors);
/// Same calibration over raw pixel vectors.
NoiseModel calibrate_sigma_y(const std::vector<Vector>& dataset, const ImageGrid& grid,
                             int num_detectors);

}  // namespace pnpeval::tomo
