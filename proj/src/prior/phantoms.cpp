#include "pnpeval/gmm_prior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pnpeval::prior {
namespace {

struct Ellipse {
  double cx, cy, a, b, angle, value;
};

struct Blob {
  double cx, cy, sx, sy, angle, amplitude;
};

// Pixel centers mapped to [-1, 1] on both axes; row index grows downward.
double coord(int index, int side) { return (2.0 * index + 1.0) / side - 1.0; }

void add_ellipse(Vector& img, int side, const Ellipse& e) {
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  for (int r = 0; r < side; ++r) {
    const double y = -coord(r, side) - e.cy;
    for (int col = 0; col < side; ++col) {
      const double x = coord(col, side) - e.cx;
      const double u = (c * x + s * y) / e.a;
      const double v = (-s * x + c * y) / e.b;
      if (u * u + v * v <= 1.0) img[r * side + col] += e.value;
    }
  }
}

void add_blob(Vector& img, int side, const Blob& g) {
  const double c = std::cos(g.angle), s = std::sin(g.angle);
  for (int r = 0; r < side; ++r) {
    const double y = -coord(r, side) - g.cy;
    for (int col = 0; col < side; ++col) {
      const double x = coord(col, side) - g.cx;
      const double u = (c * x + s * y) / g.sx;
      const double v = (-s * x + c * y) / g.sy;
      img[r * side + col] += g.amplitude * std::exp(-0.5 * (u * u + v * v));
    }
  }
}

Vector one_phantom(int side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto uni = [&](double lo, double hi) { return lo + (hi - lo) * U(rng); };
  Vector img = Vector::Zero(static_cast<Eigen::Index>(side) * side);

  add_ellipse(img, side, {uni(-0.05, 0.05), uni(-0.05, 0.05), uni(0.65, 0.85), uni(0.55, 0.8),
                          uni(0.0, std::numbers::pi), uni(0.25, 0.45)});
  const int inner = 2 + static_cast<int>(U(rng) * 3.0);
  for (int i = 0; i < inner; ++i) {
    add_ellipse(img, side, {uni(-0.4, 0.4), uni(-0.4, 0.4), uni(0.08, 0.3), uni(0.08, 0.3),
                            uni(0.0, std::numbers::pi), uni(-0.2, 0.5)});
  }
  const int blobs = 1 + static_cast<int>(U(rng) * 3.0);
  for (int i = 0; i < blobs; ++i) {
    add_blob(img, side, {uni(-0.5, 0.5), uni(-0.5, 0.5), uni(0.05, 0.2), uni(0.05, 0.2),
                         uni(0.0, std::numbers::pi), uni(0.2, 0.6)});
  }
  return img.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

PhantomTemplateSet make_phantoms(const tomo::ImageGrid& grid, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("make_phantoms: count must be >= 1");
  PhantomTemplateSet set{grid, {}};
  set.templates.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(derive_seed(seed, string_tag("phantom"), static_cast<std::uint64_t>(i)));
    set.templates.push_back(one_phantom(grid.side(), rng));
  }
  return set;
}

}  // namespace pnpeval::prior
