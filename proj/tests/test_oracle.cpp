#include "pnpeval/metrics.hpp"
#include "pnpeval/oracle.hpp"
#include "pnpeval/prior_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace pnpeval;
using namespace pnpeval::oracle;
using prior::Covariance;
using prior::GmmPrior;

namespace {

Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Matrix random_spd(int n, std::mt19937_64& rng, double floor) {
  Matrix a(n, n);
  std::normal_distribution<double> normal;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return a * a.transpose() / n + floor * Matrix::Identity(n, n);
}

tomo::ObservationPtr radon_obs(int side, int p, double sigma_y) {
  const tomo::ImageGrid grid(side);
  return tomo::make_radon_observation(tomo::make_geometry(grid, p, tomo::default_detector_count(side)),
                                      tomo::NoiseModel(sigma_y));
}

}  // namespace

TEST_CASE("conjugate update in one dimension") {
  const GmmPrior g({1.0}, {Vector::Zero(1)}, {Covariance::isotropic(1, 1.0)});
  const auto obs = tomo::make_matrix_observation(Matrix::Identity(1, 1), tomo::NoiseModel(1.0));
  const auto post = exact_posterior(g, obs, Vector::Constant(1, 2.0));
  REQUIRE(post.mixture.num_components() == 1);
  CHECK(post.mixture.mean(0)[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(post.mixture.covariance(0).dense()(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(post.sigma_y == 1.0);
  CHECK(post.warnings.empty());
}

TEST_CASE("posterior matches the literal conjugate formulas") {
  std::mt19937_64 rng(1);
  const int n = 4;
  Matrix h(3, n);
  for (int i = 0; i < 3; ++i) h.row(i) = random_vector(n, rng).transpose();
  const double sy = 0.4;
  const auto obs = tomo::make_matrix_observation(h, tomo::NoiseModel(sy));
  const std::vector<Matrix> sig{random_spd(n, rng, 0.1), 0.3 * Matrix::Identity(n, n)};
  const GmmPrior g({0.4, 0.6}, {random_vector(n, rng), random_vector(n, rng)},
                   {Covariance::full(sig[0]), Covariance::isotropic(n, 0.3)});
  const Vector y = random_vector(3, rng);
  const auto post = exact_posterior(g, obs, y);

  std::vector<double> logw;
  for (int k = 0; k < 2; ++k) {
    const Matrix s_post = (sig[k].inverse() + h.transpose() * h / (sy * sy)).inverse();
    const Vector m_post = s_post * (sig[k].inverse() * g.mean(k) + h.transpose() * y / (sy * sy));
    CHECK((post.mixture.covariance(k).dense() - s_post).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((post.mixture.mean(k) - m_post).cwiseAbs().maxCoeff() <= 1e-12);
    const Matrix v = h * sig[k] * h.transpose() + sy * sy * Matrix::Identity(3, 3);
    const Vector r = y - h * g.mean(k);
    logw.push_back(std::log(g.weight(k)) - 0.5 * (std::log(v.determinant()) + r.dot(v.inverse() * r)));
  }
  const double mx = std::max(logw[0], logw[1]);
  const double z = std::exp(logw[0] - mx) + std::exp(logw[1] - mx);
  for (int k = 0; k < 2; ++k) CHECK(post.mixture.weight(k) == doctest::Approx(std::exp(logw[k] - mx) / z).epsilon(1e-12));
}

TEST_CASE("vague likelihood leaves the prior unchanged") {
  std::mt19937_64 rng(2);
  const auto obs = radon_obs(8, 3, 1e6);
  const GmmPrior g({0.3, 0.7}, {random_vector(64, rng), random_vector(64, rng)},
                   {Covariance::isotropic(64, 0.1), Covariance::isotropic(64, 0.2)});
  const auto post = exact_posterior(g, obs, random_vector(obs->m(), rng, 5.0));
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(post.mixture.weight(k) - g.weight(k)) <= 1e-3);
    CHECK((post.mixture.mean(k) - g.mean(k)).cwiseAbs().maxCoeff() <= 1e-3);
  }
}

TEST_CASE("posterior covariance is dominated by the prior covariance") {
  std::mt19937_64 rng(3);
  const auto obs = radon_obs(8, 6, 0.05);
  const Matrix s = random_spd(64, rng, 0.01) * 0.05;
  const GmmPrior g({0.5, 0.5}, {random_vector(64, rng), random_vector(64, rng)},
                   {Covariance::full(s), Covariance::isotropic(64, 0.02)});
  const auto post = exact_posterior(g, obs, random_vector(obs->m(), rng));
  for (int k = 0; k < 2; ++k) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.covariance(k).dense() - post.mixture.covariance(k).dense());
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("astronomically unlikely data falls back to uniform weights") {
  const GmmPrior g({0.2, 0.8}, {Vector::Zero(1), Vector::Ones(1)},
                   {Covariance::isotropic(1, 1e-3), Covariance::isotropic(1, 1e-3)});
  const auto obs = tomo::make_matrix_observation(Matrix::Identity(1, 1), tomo::NoiseModel(1e-3));
  const auto post = exact_posterior(g, obs, Vector::Constant(1, 1e200));
  CHECK(all_finite(post.mixture.mean(0)));
  double sum = 0.0;
  for (double w : post.mixture.weights()) sum += w;
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("grid oracle") {
  std::mt19937_64 rng(4);
  const Vector m0 = (Vector(2) << -0.8, 0.3).finished(), m1 = (Vector(2) << 0.9, -0.2).finished();
  Matrix s0(2, 2);
  s0 << 0.30, 0.08, 0.08, 0.20;
  const GmmPrior g({0.45, 0.55}, {m0, m1}, {Covariance::full(s0), Covariance::isotropic(2, 0.15)});
  const tomo::ImageGrid tiny(2);
  Matrix h(2, 2);
  h << 1.0, 0.5, -0.3, 1.0;

  SUBCASE("matches the closed-form posterior") {
    // One view with two detectors of a two-pixel object.
    const auto obs = tomo::make_matrix_observation(h, tomo::NoiseModel(0.3));
    const Vector y = h * g.sample(1, 8)[0] + 0.3 * random_vector(2, rng);
    const GridSpec spec = covering_grid(g, 200);
    const auto grid = grid_posterior_oracle(g, *obs, y, spec);
    CHECK(grid.integral() == doctest::Approx(1.0).epsilon(1e-6));
    const auto post = exact_posterior(g, obs, y);
    const auto closed = tabulate(post.mixture, spec);
    CHECK(total_variation(grid, closed) <= 1e-3);
  }
  SUBCASE("vague likelihood gives the prior") {
    const auto obs = tomo::make_matrix_observation(h, tomo::NoiseModel(1e6));
    const GridSpec spec = covering_grid(g, 200);
    const auto grid = grid_posterior_oracle(g, *obs, Vector::Zero(2), spec);
    CHECK(total_variation(grid, tabulate(g, spec)) <= 1e-3);
  }
  SUBCASE("three-dimensional instance") {
    const GmmPrior g3({1.0}, {Vector::Zero(3)}, {Covariance::isotropic(3, 0.5)});
    const auto obs = tomo::make_matrix_observation(Matrix::Ones(1, 3), tomo::NoiseModel(0.5));
    const GridSpec spec = covering_grid(g3, 60);
    const Vector y = Vector::Constant(1, 0.7);
    const auto grid = grid_posterior_oracle(g3, *obs, y, spec);
    CHECK(grid.integral() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(total_variation(grid, tabulate(exact_posterior(g3, obs, y).mixture, spec)) <= 1e-2);
  }
  SUBCASE("dimension limit") {
    const GmmPrior g4({1.0}, {Vector::Zero(4)}, {Covariance::isotropic(4, 1.0)});
    const auto obs = tomo::make_matrix_observation(Matrix::Identity(4, 4), tomo::NoiseModel(1.0));
    CHECK_THROWS_AS(grid_posterior_oracle(g4, *obs, Vector::Zero(4), covering_grid(g4, 5)), UnsupportedDimension);
  }
}

TEST_CASE("posterior sampling") {
  std::mt19937_64 rng(5);
  SUBCASE("single component moments") {
    const int n = 3;
    const Matrix s = random_spd(n, rng, 0.1);
    const GmmPrior g({1.0}, {random_vector(n, rng)}, {Covariance::full(s)});
    Matrix h(2, n);
    h << 1, 0, 1, 0, 1, -1;
    const auto obs = tomo::make_matrix_observation(h, tomo::NoiseModel(0.5));
    const auto post = exact_posterior(g, obs, random_vector(2, rng));
    const std::size_t N = 10000;
    const auto xs = sample_posterior(post, N, 12);
    Vector mean = Vector::Zero(n);
    for (const auto& x : xs) mean += x;
    mean /= static_cast<double>(N);
    Matrix cov = Matrix::Zero(n, n);
    for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
    cov /= static_cast<double>(N - 1);
    const Matrix sp = post.mixture.covariance(0).dense();
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(mean[i] - post.mixture.mean(0)[i]) <= 4.0 * std::sqrt(sp(i, i) / N));
      for (int j = 0; j < n; ++j)
        CHECK(std::abs(cov(i, j) - sp(i, j)) <= 4.0 * std::sqrt((sp(i, i) * sp(j, j) + sp(i, j) * sp(i, j)) / N));
    }
    const auto again = sample_posterior(post, 5, 12);
    for (int i = 0; i < 5; ++i) CHECK((again[i] - xs[i]).norm() == 0.0);
  }
  SUBCASE("bimodal occupancy") {
    const GmmPrior g({0.5, 0.5}, {Vector::Constant(1, -5.0), Vector::Constant(1, 5.0)},
                     {Covariance::isotropic(1, 1.0), Covariance::isotropic(1, 1.0)});
    const auto obs = tomo::make_matrix_observation(Matrix::Identity(1, 1), tomo::NoiseModel(3.0));
    const auto post = exact_posterior(g, obs, Vector::Constant(1, 0.8));
    const std::size_t N = 10000;
    const auto xs = sample_posterior(post, N, 3);
    const double w1 = post.mixture.weight(1);
    REQUIRE(w1 > 0.2);
    REQUIRE(w1 < 0.8);
    const double right = static_cast<double>(std::count_if(xs.begin(), xs.end(), [](const Vector& v) { return v[0] > 0; })) / N;
    CHECK(std::abs(right - w1) <= 4.0 * std::sqrt(w1 * (1 - w1) / N));
  }
}

TEST_CASE("pixel marginals") {
  std::mt19937_64 rng(6);
  const GmmPrior single({1.0}, {random_vector(5, rng)}, {Covariance::isotropic(5, 0.3)});
  for (int i = 0; i < 5; ++i) {
    const auto m = single.marginal(i);
    CHECK(m.means[0] == single.mean(0)[i]);
    CHECK(m.variances[0] == doctest::Approx(0.3));
  }

  const auto obs = radon_obs(8, 3, 0.05);
  const GmmPrior g({0.5, 0.5}, {Vector::Constant(64, 0.2), Vector::Constant(64, 0.7)},
                   {Covariance::isotropic(64, 0.02), Covariance::isotropic(64, 0.03)});
  const Vector y = obs->op().forward(g.sample(1, 2)[0]) + 0.05 * random_vector(obs->m(), rng);
  const auto post = exact_posterior(g, obs, y);
  const int pixel = 27;
  const prior::Gmm1d marg = pixel_marginal(post, pixel);
  CHECK_THROWS(pixel_marginal(post, 64));

  // Composite Simpson over +-12 standard deviations.
  const double lo = marg.mean() - 12 * marg.stddev(), hi = marg.mean() + 12 * marg.stddev();
  const int steps = 4000;
  const double dx = (hi - lo) / steps;
  double integral = marg.pdf(lo) + marg.pdf(hi);
  for (int i = 1; i < steps; ++i) integral += (i % 2 ? 4.0 : 2.0) * marg.pdf(lo + i * dx);
  integral *= dx / 3.0;
  CHECK(std::abs(integral - 1.0) <= 1e-8);

  const auto xs = sample_posterior(post, 10000, 4);
  std::vector<double> vals;
  for (const auto& x : xs) vals.push_back(x[pixel]);
  const metrics::Histogram hist = metrics::histogram(vals, 100);
  CHECK(metrics::wasserstein1(hist, marg) <= 0.02 * marg.stddev());
}

TEST_CASE("oracle aggregation and measurement consistency") {
  // Prior draw, measurement, then an exact posterior draw.
  const tomo::ImageGrid grid(8);
  const GmmPrior g = make_prior_from_templates(prior::make_phantoms(grid, 3, 2), 0.01);
  const std::size_t N = 2000;
  for (int p : {1, 6}) {
    const auto obs = radon_obs(8, p, 0.05);
    const PosteriorOracle oracle(g, obs);
    const auto xs = g.sample(N, 10 + p);
    std::vector<Vector> ys, post_samples;
    for (std::size_t i = 0; i < N; ++i) {
      const Vector y = tomo::simulate_measurement(tomo::Image{grid, xs[i]}, obs->op_ptr() ? std::dynamic_pointer_cast<const tomo::RadonOperator>(obs->op_ptr())->geometry_ptr() : nullptr,
                                                  obs->noise(), derive_seed(99, p, i))
                           .values;
      ys.push_back(y);
      post_samples.push_back(sample_posterior(oracle.posterior(y), 1, derive_seed(7, p, i))[0]);
    }
    const double nmc = metrics::nmc(post_samples, ys, *obs);
    CAPTURE(p);
    CHECK(std::abs(nmc - 1.0) <= 3.0 * std::sqrt(2.0 / (static_cast<double>(N) * obs->m())));

    metrics::MmdOptions opts;
    opts.seed = 5 + p;
    const auto mmd = metrics::mmd2(xs, post_samples, {}, opts);
    CHECK(mmd.p_value > 0.01);
  }
}

TEST_CASE("posterior serialization") {
  const GmmPrior g({1.0}, {Vector::Zero(2)}, {Covariance::isotropic(2, 1.0)});
  const auto obs = tomo::make_matrix_observation(Matrix::Identity(2, 2), tomo::NoiseModel(0.5));
  const auto post = exact_posterior(g, obs, Vector::Ones(2));
  const auto prov = posterior_provenance(post);
  CHECK(prov["sigma_y"] == 0.5);
  const auto path = std::filesystem::temp_directory_path() / "pnpeval_posterior.json";
  save_posterior(path, post);
  const GmmPrior back = prior::load_prior(path);
  CHECK((back.mean(0) - post.mixture.mean(0)).norm() <= 1e-15);
  std::filesystem::remove(path);
}
