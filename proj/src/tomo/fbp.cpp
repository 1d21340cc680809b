#include "pnpeval/tomo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pnpeval::tomo {

std::vector<double> ramp_kernel(int len, double spacing) {
  std::vector<double> h(static_cast<std::size_t>(len), 0.0);
  if (len == 0) return h;
  const double inv_t2 = 1.0 / (spacing * spacing);
  h[0] = 0.25 * inv_t2;
  for (int m = 1; m < len; m += 2) {
    h[m] = -inv_t2 / (std::numbers::pi * std::numbers::pi * static_cast<double>(m) * m);
  }
  return h;
}

// Each projection is convolved (linear, not circular) with the spatial
// Ram-Lak kernel, which is the zero-padded frequency-domain ramp filter
// written out directly. Back-projection uses the exact adjoint, whose
// per-pixel weights sum to h^2 / spacing along a ray bundle; the final
// scale undoes that and applies the pi / p angular quadrature.
void filtered_backproject(const RadonGeometry& g, std::span<const double> sino,
                          std::span<double> image) {
  const int d = g.num_detectors();
  const int p = g.num_projections();
  if (sino.size() != static_cast<std::size_t>(g.measurement_dim()))
    throw std::invalid_argument("fbp: sinogram size does not match geometry");
  if (image.size() != static_cast<std::size_t>(g.grid().n()))
    throw std::invalid_argument("fbp: image size does not match geometry");

  const double dt = g.detector_spacing();
  const std::vector<double> kernel = ramp_kernel(d, dt);
  std::vector<double> filtered(sino.size(), 0.0);
  for (int j = 0; j < p; ++j) {
    const double* row = sino.data() + static_cast<std::size_t>(j) * d;
    double* out = filtered.data() + static_cast<std::size_t>(j) * d;
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int l = 0; l < d; ++l) acc += kernel[std::abs(k - l)] * row[l];
      out[k] = dt * acc;
    }
  }
  backproject(g, filtered, image);
  const double h = g.grid().pixel_size();
  const double scale = std::numbers::pi / p * dt / (h * h);
  for (double& v : image) v *= scale;
}

Image fbp(const Sinogram& s) {
  if (!s.geometry) throw std::invalid_argument("fbp: sinogram has no geometry");
  Image out{s.geometry->grid(), Vector::Zero(s.geometry->grid().n())};
  filtered_backproject(*s.geometry, as_span(s.values), as_span(out.values));
  return out;
}

}  // namespace pnpeval::tomo
