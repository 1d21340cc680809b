#include "pnpeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pnpeval::metrics {
namespace {

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double Phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Integral of |d(x)| over [0, w] for d linear from d0 to d1.
double abs_linear_integral(double d0, double d1, double w) {
  if ((d0 >= 0.0) == (d1 >= 0.0)) return 0.5 * (std::abs(d0) + std::abs(d1)) * w;
  return 0.5 * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1)) * w;
}

}  // namespace

double Histogram::cdf(double x) const {
  if (x <= edges.front()) return 0.0;
  if (x >= edges.back()) return 1.0;
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < bin; ++i) acc += mass[i];
  const double frac = (x - edges[bin]) / (edges[bin + 1] - edges[bin]);
  return acc + frac * mass[bin];
}

Histogram histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  if (values.empty()) throw std::invalid_argument("histogram: no values");
  if (bins < 2) throw std::invalid_argument("histogram: need at least 2 bins");
  if (!(hi > lo)) throw std::invalid_argument("histogram: empty range");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + i * width;
  h.edges.back() = hi;
  h.mass.assign(static_cast<std::size_t>(bins), 0.0);
  std::size_t kept = 0;
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    auto bin = static_cast<int>((v - lo) / width);
    bin = std::clamp(bin, 0, bins - 1);
    h.mass[static_cast<std::size_t>(bin)] += 1.0;
    ++kept;
  }
  if (kept == 0) throw std::invalid_argument("histogram: no values inside the range");
  for (double& m : h.mass) m /= static_cast<double>(kept);
  return h;
}

Histogram histogram(const std::vector<double>& values, int bins) {
  if (values.empty()) throw std::invalid_argument("histogram: no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return histogram(values, bins, *lo - 0.5, *hi + 0.5);
  return histogram(values, bins, *lo, *hi);
}

Histogram pixel_histogram(const std::vector<Vector>& samples, int pixel_index, int bins) {
  if (samples.empty()) throw std::invalid_argument("pixel_histogram: no samples");
  std::vector<double> values;
  values.reserve(samples.size());
  for (const Vector& s : samples) {
    if (pixel_index < 0 || pixel_index >= s.size())
      throw std::out_of_range("pixel_histogram: pixel index out of range");
    values.push_back(s[pixel_index]);
  }
  return histogram(values, bins);
}

double wasserstein1(const Histogram& a, const Histogram& b) {
  std::vector<double> knots = a.edges;
  knots.insert(knots.end(), b.edges.begin(), b.edges.end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  double acc = 0.0;
  double d0 = a.cdf(knots.front()) - b.cdf(knots.front());
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double d1 = a.cdf(knots[i]) - b.cdf(knots[i]);
    acc += abs_linear_integral(d0, d1, knots[i] - knots[i - 1]);
    d0 = d1;
  }
  return acc;
}

double wasserstein1(const Histogram& a, const prior::Gmm1d& b) {
  const double lo = a.edges.front();
  const double hi = a.edges.back();
  double acc = 0.0;
  // Left of the histogram F_a = 0, right of it F_a = 1.
  for (std::size_t k = 0; k < b.weights.size(); ++k) {
    const double s = std::sqrt(b.variances[k]);
    const double zl = (lo - b.means[k]) / s;
    const double zr = (hi - b.means[k]) / s;
    acc += b.weights[k] * s * (zl * Phi(zl) + phi(zl));
    acc += b.weights[k] * s * (phi(zr) - zr * (1.0 - Phi(zr)));
  }
  // Inside: composite Simpson on each bin.
  constexpr int kSub = 64;
  for (int bin = 0; bin < a.bins(); ++bin) {
    const double x0 = a.edges[static_cast<std::size_t>(bin)];
    const double h = (a.edges[static_cast<std::size_t>(bin) + 1] - x0) / kSub;
    double sum = 0.0;
    for (int j = 0; j <= kSub; ++j) {
      const double x = x0 + j * h;
      const double w = (j == 0 || j == kSub) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      sum += w * std::abs(a.cdf(x) - b.cdf(x));
    }
    acc += sum * h / 3.0;
  }
  return acc;
}

double wasserstein1_samples(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1_samples: empty input");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double x = std::min(a.front(), b.front());
  double acc = 0.0;
  while (i < a.size() || j < b.size()) {
    const double next = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    acc += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - x);
    x = next;
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
  }
  return acc;
}

}  // namespace pnpeval::metrics
