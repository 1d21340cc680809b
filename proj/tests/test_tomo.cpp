#include "pnpeval/linear_operator.hpp"
#include "pnpeval/tensor_io.hpp"
#include "pnpeval/tomo.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <cstring>
#include <sstream>

using namespace pnpeval;
using namespace pnpeval::tomo;

namespace {

Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

// H assembled one column at a time from unit images.
Matrix assemble_columns(const RadonGeometry& g) {
  const int n = g.grid().n();
  Matrix h(g.measurement_dim(), n);
  Vector e = Vector::Zero(n), col(g.measurement_dim());
  for (int j = 0; j < n; ++j) {
    e.setZero();
    e[j] = 1.0;
    project(g, as_span(e), as_span(col));
    h.col(j) = col;
  }
  return h;
}

Vector gaussian_blob(int side, double width) {
  Vector x(side * side);
  const double c = 0.5 * (side - 1);
  for (int r = 0; r < side; ++r)
    for (int q = 0; q < side; ++q) {
      const double dx = (q - c) / side, dy = (r - c) / side;
      x[r * side + q] = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
    }
  return x;
}

}  // namespace

TEST_CASE("geometry: equispaced angles and sizes") {
  const ImageGrid grid(32);
  CHECK(default_detector_count(32) == 47);
  const auto g1 = make_geometry(grid, 1, 47);
  CHECK(g1->angles() == std::vector<double>{0.0});
  CHECK(g1->measurement_dim() == 47);
  const auto g4 = make_geometry(grid, 4, 47);
  REQUIRE(g4->angles().size() == 4);
  for (int j = 0; j < 4; ++j) CHECK(g4->angles()[j] == doctest::Approx(j * std::numbers::pi / 4).epsilon(1e-15));
  CHECK(make_geometry(grid, 180, 47)->measurement_dim() == 8460);
  CHECK_THROWS_AS(make_geometry(grid, 0, 47), std::invalid_argument);
  CHECK_THROWS_AS(make_geometry(grid, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_geometry(grid, std::vector<double>{0.5, 0.2}, 47), std::invalid_argument);
  CHECK_THROWS_AS(make_geometry(grid, std::vector<double>{0.0, std::numbers::pi}, 47), std::invalid_argument);
  CHECK_THROWS_AS(ImageGrid(1), std::invalid_argument);
}

TEST_CASE("detector array spans the circumscribed circle") {
  const ImageGrid grid(16, 0.5);
  const auto g = make_geometry(grid, 3, default_detector_count(16));
  const double radius = 0.5 * 16 * 0.5 * std::numbers::sqrt2;
  CHECK(g->detector_offset(0) == doctest::Approx(-radius));
  CHECK(g->detector_offset(g->num_detectors() - 1) == doctest::Approx(radius));
}

TEST_CASE("forward projection of zero is zero") {
  const ImageGrid grid(32);
  const auto g = make_geometry(grid, 6, 47);
  const Sinogram s = radon_forward(Image{grid, Vector::Zero(grid.n())}, g);
  CHECK(s.values.size() == g->measurement_dim());
  CHECK(s.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(radon_adjoint(Sinogram{g, Vector::Zero(g->measurement_dim())}).values.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(radon_forward(Image{ImageGrid(8), Vector::Zero(64)}, g), std::invalid_argument);
}

TEST_CASE("center pixel: symmetric profiles under the square's symmetries") {
  // A square pixel is not rotation invariant, so profiles at arbitrary angles
  // differ; the symmetries of the square must still hold exactly.
  const ImageGrid grid(9);
  const int d = default_detector_count(9) | 1;  // odd: one detector on the centre ray
  const auto g = make_geometry(grid, 4, d);
  Vector x = Vector::Zero(grid.n());
  x[4 * 9 + 4] = 1.0;
  const Vector s = radon_forward(Image{grid, x}, g).values;
  const auto at = [&](int j, int k) { return s[j * d + k]; };
  for (int k = 0; k < d; ++k) {
    CHECK(at(0, k) == doctest::Approx(at(2, k)).epsilon(1e-12));    // theta, theta + pi/2
    CHECK(at(1, k) == doctest::Approx(at(3, k)).epsilon(1e-12));    // theta, pi - theta
    for (int j = 0; j < 4; ++j) CHECK(at(j, k) == doctest::Approx(at(j, d - 1 - k)).epsilon(1e-12));
  }
  for (int j = 0; j < 4; ++j) {
    Eigen::Index peak = 0;
    s.segment(j * d, d).maxCoeff(&peak);
    CHECK(peak == d / 2);
    CHECK(s.segment(j * d, d).minCoeff() >= 0.0);
  }
}

TEST_CASE("dense assembly agrees with forward and adjoint on 8x8") {
  std::mt19937_64 rng(11);
  const ImageGrid grid(8);
  for (int p : {1, 3, 7}) {
    const auto g = make_geometry(grid, p, default_detector_count(8));
    const Matrix h = assemble_columns(*g);
    const Vector x = random_vector(grid.n(), rng);
    const Vector u = random_vector(g->measurement_dim(), rng);
    CHECK((radon_forward(Image{grid, x}, g).values - h * x).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((radon_adjoint(Sinogram{g, u}).values - h.transpose() * u).cwiseAbs().maxCoeff() <= 1e-12);
    // Single-bin sinogram back-projects to one row of H.
    for (int bin : {0, g->measurement_dim() / 2, g->measurement_dim() - 1}) {
      Vector e = Vector::Zero(g->measurement_dim());
      e[bin] = 1.0;
      CHECK((radon_adjoint(Sinogram{g, e}).values - h.row(bin).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK((RadonOperator(g).dense() - h).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("adjoint identity over random pairs") {
  std::mt19937_64 rng(5);
  for (int side : {8, 13, 32}) {
    for (int p : {1, 3, 6, 90}) {
      const ImageGrid grid(side);
      const auto g = make_geometry(grid, p, default_detector_count(side));
      double worst = 0.0;
      for (int trial = 0; trial < 100; ++trial) {
        const Vector x = random_vector(grid.n(), rng);
        const Vector u = random_vector(g->measurement_dim(), rng);
        const double lhs = radon_forward(Image{grid, x}, g).values.dot(u);
        const double rhs = x.dot(radon_adjoint(Sinogram{g, u}).values);
        worst = std::max(worst, std::abs(lhs - rhs) / (x.norm() * u.norm()));
      }
      CAPTURE(side);
      CAPTURE(p);
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("linearity") {
  std::mt19937_64 rng(9);
  const ImageGrid grid(16);
  const auto g = make_geometry(grid, 7, default_detector_count(16));
  const Vector x1 = random_vector(grid.n(), rng), x2 = random_vector(grid.n(), rng);
  const double a = 1.7, b = -0.3;
  const Vector lhs = radon_forward(Image{grid, a * x1 + b * x2}, g).values;
  const Vector rhs = a * radon_forward(Image{grid, x1}, g).values + b * radon_forward(Image{grid, x2}, g).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("filtered back-projection") {
  const ImageGrid grid(32);
  const int d = default_detector_count(32);
  const Vector x = gaussian_blob(32, 0.12);
  std::vector<double> errors;
  for (int p : {6, 30, 180}) {
    const auto g = make_geometry(grid, p, d);
    const Vector rec = fbp(radon_forward(Image{grid, x}, g)).values;
    errors.push_back((rec - x).norm() / x.norm());
  }
  CHECK(errors[2] <= 0.05);
  CHECK(errors[1] < errors[0]);
  CHECK(errors[2] < errors[1]);

  const auto g1 = make_geometry(grid, 1, d);
  const Vector smear = fbp(radon_forward(Image{grid, x}, g1)).values;
  CHECK(all_finite(smear));
  CHECK(fbp(Sinogram{g1, Vector::Zero(d)}).values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fbp is insensitive to pixel size") {
  const Vector x = gaussian_blob(24, 0.12);
  for (double h : {0.25, 1.0, 3.0}) {
    const ImageGrid grid(24, h);
    const auto g = make_geometry(grid, 180, default_detector_count(24));
    const Vector rec = fbp(radon_forward(Image{grid, x}, g)).values;
    CAPTURE(h);
    CHECK((rec - x).norm() / x.norm() <= 0.05);
  }
}

TEST_CASE("simulate_measurement") {
  const ImageGrid grid(8);
  const auto g = make_geometry(grid, 3, default_detector_count(8));
  std::mt19937_64 rng(3);
  const Image x{grid, random_vector(grid.n(), rng)};
  CHECK((simulate_measurement(x, g, 0.0, 1).values - radon_forward(x, g).values).cwiseAbs().maxCoeff() == 0.0);
  const Vector a = simulate_measurement(x, g, 0.1, 42).values;
  const Vector b = simulate_measurement(x, g, 0.1, 42).values;
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);

  const double sigma = 0.3;
  const int N = 10000;
  const int m = g->measurement_dim();
  const Image zero{grid, Vector::Zero(grid.n())};
  double acc = 0.0;
  for (int i = 0; i < N; ++i)
    acc += simulate_measurement(zero, g, NoiseModel(sigma), static_cast<std::uint64_t>(i) + 100).values.squaredNorm();
  const double mean = acc / (static_cast<double>(N) * m * sigma * sigma);
  CHECK(std::abs(mean - 1.0) <= 3.0 * std::sqrt(2.0 / (static_cast<double>(N) * m)));
}

TEST_CASE("calibrate_sigma_y") {
  const ImageGrid grid(16);
  const int d = default_detector_count(16);
  const auto g180 = make_geometry(grid, 180, d);
  Vector base = gaussian_blob(16, 0.1);
  const Vector s = radon_forward(Image{grid, base}, g180).values;
  CHECK(s.minCoeff() == doctest::Approx(0.0).epsilon(1e-300));
  const double dyn = s.maxCoeff() - s.minCoeff();

  const Image one{grid, base * (2.0 / dyn)};
  CHECK(calibrate_sigma_y(std::vector<Image>{one}, grid, d).sigma_y() == doctest::Approx(0.02).epsilon(1e-12));
  const Image a{grid, base * (1.0 / dyn)}, b{grid, base * (3.0 / dyn)};
  CHECK(calibrate_sigma_y(std::vector<Image>{a, b}, grid, d).sigma_y() == doctest::Approx(0.02).epsilon(1e-12));
  CHECK_THROWS_AS(calibrate_sigma_y(std::vector<Image>{Image{grid, Vector::Zero(grid.n())}}, grid, d),
                  DegenerateCalibration);
  CHECK_THROWS_AS(calibrate_sigma_y(std::vector<Image>{}, grid, d), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel(0.0), std::invalid_argument);
}

TEST_CASE("matrix operator and observation caches") {
  Matrix h(2, 3);
  h << 1, 2, 0, 0, 1, -1;
  const auto obs = make_matrix_observation(h, NoiseModel(0.5));
  CHECK(obs->n() == 3);
  CHECK(obs->m() == 2);
  CHECK((obs->gram() - h.transpose() * h).cwiseAbs().maxCoeff() <= 1e-14);
  const GramSpectrum& sp = obs->spectrum();
  CHECK((sp.basis * sp.eigenvalues.asDiagonal() * sp.basis.transpose() - obs->gram()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(sp.eigenvalues.minCoeff() >= 0.0);
  CHECK((h * obs->pseudo_inverse() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("tensor format round trip") {
  const ImageGrid grid(4, 0.5);
  Vector v(16);
  for (int i = 0; i < 16; ++i) v[i] = 0.1 * i - 0.3;
  std::stringstream buf;
  io::write_tensor(buf, io::image_tensor(Image{grid, v}));
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == "PNPTNSR1");
  const io::Tensor t = io::read_tensor(buf);
  CHECK(t.shape == std::vector<std::int64_t>{4, 4});
  const Image back = io::tensor_image(t);
  CHECK(back.grid == grid);
  CHECK((back.values - v).cwiseAbs().maxCoeff() == 0.0);

  const auto g = make_geometry(grid, 2, 5);
  const Sinogram s{g, Vector::LinSpaced(10, -1.0, 1.0)};
  std::stringstream sbuf;
  io::write_tensor(sbuf, io::sinogram_tensor(s));
  const Sinogram s2 = io::tensor_sinogram(io::read_tensor(sbuf), g);
  CHECK((s2.values - s.values).cwiseAbs().maxCoeff() == 0.0);

  std::stringstream bad("NOTATENSOR");
  CHECK_THROWS(io::read_tensor(bad));
}
