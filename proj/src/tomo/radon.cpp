#include "pnpeval/tomo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pnpeval::tomo {
namespace {

// Visits every (pixel, weight) pair of ray (angle j, detector k) under
// Joseph's method: the ray is sampled once per row (or column, whichever
// the ray crosses more steeply) and the image is linearly interpolated
// between the two neighbouring pixel centers. The same visitor drives both
// the forward projector and its adjoint, so the two are exact transposes.
template <typename Visit>
inline void for_each_ray_weight(const RadonGeometry& g, int j, int k, Visit&& visit) {
  const int side = g.grid().side();
  const double h = g.grid().pixel_size();
  const double center = 0.5 * (side - 1);
  const double c = g.cos_angle(j);
  const double s = g.sin_angle(j);
  const double t = g.detector_offset(k);

  if (std::abs(c) >= std::abs(s)) {
    // Step along rows: x = (t - y s) / c.
    const double step = h / std::abs(c);
    for (int i = 0; i < side; ++i) {
      const double y = (center - i) * h;
      const double u = (t - y * s) / (c * h) + center;
      const double fl = std::floor(u);
      const int j0 = static_cast<int>(fl);
      const double f = u - fl;
      if (j0 >= 0 && j0 < side) visit(i * side + j0, (1.0 - f) * step);
      if (j0 + 1 >= 0 && j0 + 1 < side) visit(i * side + j0 + 1, f * step);
    }
  } else {
    // Step along columns: y = (t - x c) / s, row index = center - y / h.
    const double step = h / std::abs(s);
    for (int col = 0; col < side; ++col) {
      const double x = (col - center) * h;
      const double v = center - (t - x * c) / (s * h);
      const double fl = std::floor(v);
      const int i0 = static_cast<int>(fl);
      const double f = v - fl;
      if (i0 >= 0 && i0 < side) visit(i0 * side + col, (1.0 - f) * step);
      if (i0 + 1 >= 0 && i0 + 1 < side) visit((i0 + 1) * side + col, f * step);
    }
  }
}

void check_sizes(const RadonGeometry& g, std::size_t image, std::size_t sino, const char* who) {
  if (image != static_cast<std::size_t>(g.grid().n()))
    throw std::invalid_argument(std::string(who) + ": image has " + std::to_string(image) +
                                " entries, geometry expects " + std::to_string(g.grid().n()));
  if (sino != static_cast<std::size_t>(g.measurement_dim()))
    throw std::invalid_argument(std::string(who) + ": sinogram has " + std::to_string(sino) +
                                " entries, geometry expects " +
                                std::to_string(g.measurement_dim()));
}

}  // namespace

void project(const RadonGeometry& g, std::span<const double> image, std::span<double> sino) {
  check_sizes(g, image.size(), sino.size(), "radon_forward");
  const int d = g.num_detectors();
  for (int j = 0; j < g.num_projections(); ++j) {
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for_each_ray_weight(g, j, k, [&](int pix, double w) { acc += w * image[pix]; });
      sino[j * d + k] = acc;
    }
  }
}

void backproject(const RadonGeometry& g, std::span<const double> sino, std::span<double> image) {
  check_sizes(g, image.size(), sino.size(), "radon_adjoint");
  std::fill(image.begin(), image.end(), 0.0);
  const int d = g.num_detectors();
  for (int j = 0; j < g.num_projections(); ++j) {
    for (int k = 0; k < d; ++k) {
      const double val = sino[j * d + k];
      if (val == 0.0) continue;
      for_each_ray_weight(g, j, k, [&](int pix, double w) { image[pix] += w * val; });
    }
  }
}

Sinogram radon_forward(const Image& x, const GeometryPtr& geom) {
  if (!geom) throw std::invalid_argument("radon_forward: null geometry");
  if (!(x.grid == geom->grid())) throw std::invalid_argument("radon_forward: grid mismatch");
  Sinogram out{geom, Vector::Zero(geom->measurement_dim())};
  project(*geom, as_span(x.values), as_span(out.values));
  return out;
}

Image radon_adjoint(const Sinogram& s) {
  if (!s.geometry) throw std::invalid_argument("radon_adjoint: sinogram has no geometry");
  Image out{s.geometry->grid(), Vector::Zero(s.geometry->grid().n())};
  backproject(*s.geometry, as_span(s.values), as_span(out.values));
  return out;
}

}  // namespace pnpeval::tomo
