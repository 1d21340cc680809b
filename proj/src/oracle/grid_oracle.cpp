#include "pnpeval/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pnpeval::oracle {
namespace {

void check_spec(const GridSpec& spec) {
  if (spec.lower.empty() || spec.lower.size() > 3)
    throw UnsupportedDimension("grid oracle: only 1 to 3 dimensions are supported");
  if (spec.lower.size() != spec.upper.size())
    throw std::invalid_argument("grid oracle: bounds differ in length");
  if (spec.points < 2) throw std::invalid_argument("grid oracle: need at least 2 points per axis");
  for (std::size_t i = 0; i < spec.lower.size(); ++i)
    if (!(spec.upper[i] > spec.lower[i])) throw std::invalid_argument("grid oracle: empty axis");
}

std::size_t grid_size(const GridSpec& spec) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < spec.lower.size(); ++i) total *= static_cast<std::size_t>(spec.points);
  return total;
}

}  // namespace

GridSpec covering_grid(const prior::GmmPrior& prior, int points, double stds) {
  if (prior.dim() > 3) throw UnsupportedDimension("covering_grid: n must be <= 3");
  const Vector mu = prior.mixture_mean();
  const Vector sd = prior.mixture_covariance().diagonal().cwiseSqrt();
  GridSpec spec;
  spec.points = points;
  for (int i = 0; i < prior.dim(); ++i) {
    spec.lower.push_back(mu[i] - stds * sd[i]);
    spec.upper.push_back(mu[i] + stds * sd[i]);
  }
  return spec;
}

std::vector<double> DiscretizedDensity::axis(int i) const {
  std::vector<double> a(static_cast<std::size_t>(spec.points));
  const double step = (spec.upper[i] - spec.lower[i]) / (spec.points - 1);
  for (int j = 0; j < spec.points; ++j) a[static_cast<std::size_t>(j)] = spec.lower[i] + j * step;
  a.back() = spec.upper[i];
  return a;
}

Vector DiscretizedDensity::point(std::size_t flat) const {
  const int d = dim();
  Vector x(d);
  for (int i = d - 1; i >= 0; --i) {
    const auto j = static_cast<int>(flat % static_cast<std::size_t>(spec.points));
    flat /= static_cast<std::size_t>(spec.points);
    const double step = (spec.upper[i] - spec.lower[i]) / (spec.points - 1);
    x[i] = spec.lower[i] + j * step;
  }
  return x;
}

double DiscretizedDensity::integrate(const std::vector<double>& f) const {
  const int d = dim();
  const auto P = static_cast<std::size_t>(spec.points);
  if (f.size() != grid_size(spec)) throw std::invalid_argument("integrate: wrong number of values");
  double acc = 0.0;
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    double w = 1.0;
    std::size_t rest = flat;
    for (int i = d - 1; i >= 0; --i) {
      const std::size_t j = rest % P;
      rest /= P;
      const double step = (spec.upper[i] - spec.lower[i]) / (spec.points - 1);
      w *= (j == 0 || j == P - 1) ? 0.5 * step : step;
    }
    acc += w * f[flat];
  }
  return acc;
}

DiscretizedDensity grid_posterior_oracle(const prior::GmmPrior& prior,
                                         const tomo::ObservationModel& obs, const Vector& y,
                                         const GridSpec& spec) {
  if (prior.dim() > 3) throw UnsupportedDimension("grid_posterior_oracle: n must be <= 3");
  check_spec(spec);
  if (static_cast<int>(spec.lower.size()) != prior.dim() || obs.n() != prior.dim())
    throw std::invalid_argument("grid_posterior_oracle: dimension mismatch");
  if (y.size() != obs.m()) throw std::invalid_argument("grid_posterior_oracle: wrong sinogram length");

  DiscretizedDensity out{spec, std::vector<double>(grid_size(spec))};
  const double sy2 = obs.noise().variance();
  std::vector<double> logs(out.values.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const Vector x = out.point(i);
    const double misfit = (y - obs.op().forward(x)).squaredNorm();
    logs[i] = prior.log_pt(x, 0.0) - 0.5 * misfit / sy2;
    peak = std::max(peak, logs[i]);
  }
  for (std::size_t i = 0; i < logs.size(); ++i) out.values[i] = std::exp(logs[i] - peak);
  const double z = out.integral();
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericalFailure("grid_posterior_oracle: zero mass on grid");
  for (double& v : out.values) v /= z;
  return out;
}

DiscretizedDensity tabulate(const prior::GmmPrior& density, const GridSpec& spec) {
  check_spec(spec);
  if (static_cast<int>(spec.lower.size()) != density.dim())
    throw std::invalid_argument("tabulate: dimension mismatch");
  DiscretizedDensity out{spec, std::vector<double>(grid_size(spec))};
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = std::exp(density.log_pt(out.point(i), 0.0));
  return out;
}

double total_variation(const DiscretizedDensity& a, const DiscretizedDensity& b) {
  if (a.values.size() != b.values.size() || a.spec.lower != b.spec.lower ||
      a.spec.upper != b.spec.upper || a.spec.points != b.spec.points)
    throw std::invalid_argument("total_variation: densities live on different grids");
  std::vector<double> diff(a.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(a.values[i] - b.values[i]);
  return 0.5 * a.integrate(diff);
}

}  // namespace pnpeval::oracle
