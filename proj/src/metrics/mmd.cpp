#include "pnpeval/metrics.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace pnpeval::metrics {
namespace {

void check_sets(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("mmd2: each set needs >= 2 samples");
  const Eigen::Index n = a.front().size();
  for (const auto* set : {&a, &b})
    for (const Vector& v : *set)
      if (v.size() != n) throw std::invalid_argument("mmd2: samples differ in dimension");
}

Matrix pooled(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  Matrix z(a.front().size(), static_cast<Eigen::Index>(a.size() + b.size()));
  Eigen::Index c = 0;
  for (const Vector& v : a) z.col(c++) = v;
  for (const Vector& v : b) z.col(c++) = v;
  return z;
}

// Unbiased estimate for one labelling; label 0 = A, 1 = B.
double u_statistic(const Matrix& k, const std::vector<unsigned char>& label, double na, double nb) {
  std::array<double, 3> sums{0.0, 0.0, 0.0};
  const Eigen::Index N = k.cols();
  for (Eigen::Index j = 1; j < N; ++j) {
    const double* col = k.col(j).data();
    const unsigned lj = label[static_cast<std::size_t>(j)];
    double s[3] = {0.0, 0.0, 0.0};
    for (Eigen::Index i = 0; i < j; ++i) s[lj + label[static_cast<std::size_t>(i)]] += col[i];
    sums[0] += s[0];
    sums[1] += s[1];
    sums[2] += s[2];
  }
  return 2.0 * sums[0] / (na * (na - 1.0)) + 2.0 * sums[2] / (nb * (nb - 1.0)) -
         2.0 * sums[1] / (na * nb);
}

double quantile(std::vector<double> sorted_values, double q) {
  std::sort(sorted_values.begin(), sorted_values.end());
  const double pos = q * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
  return sorted_values[lo] + (pos - static_cast<double>(lo)) * (sorted_values[hi] - sorted_values[lo]);
}

}  // namespace

double median_heuristic(const std::vector<Vector>& a, const std::vector<Vector>& b,
                        std::size_t subsample, std::uint64_t seed) {
  std::vector<const Vector*> pool;
  for (const Vector& v : a) pool.push_back(&v);
  for (const Vector& v : b) pool.push_back(&v);
  if (pool.size() > subsample) {
    std::mt19937_64 rng(derive_seed(seed, string_tag("median-subsample")));
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(subsample);
  }
  std::vector<double> d;
  d.reserve(pool.size() * (pool.size() - 1) / 2);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) d.push_back((*pool[i] - *pool[j]).norm());
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

MmdResult mmd2(const std::vector<Vector>& a, const std::vector<Vector>& b, const KernelSpec& kernel,
               const MmdOptions& options) {
  check_sets(a, b);
  if (kernel.bandwidth && !(*kernel.bandwidth > 0.0))
    throw std::invalid_argument("mmd2: bandwidth must be > 0");
  if (options.permutations < 1) throw std::invalid_argument("mmd2: need at least one permutation");

  const Matrix z = pooled(a, b);
  Matrix k = z.transpose() * z;
  MmdResult out;
  if (kernel.kind == KernelKind::rbf) {
    out.bandwidth = kernel.bandwidth ? *kernel.bandwidth
                                     : median_heuristic(a, b, options.median_subsample, options.seed);
    const Vector sq = k.diagonal();
    const double scale = -0.5 / (out.bandwidth * out.bandwidth);
    for (Eigen::Index j = 0; j < k.cols(); ++j)
      for (Eigen::Index i = 0; i < k.rows(); ++i)
        k(i, j) = std::exp(scale * std::max(0.0, sq[i] + sq[j] - 2.0 * k(i, j)));
  }

  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::vector<unsigned char> labels(a.size() + b.size(), 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(a.size()), labels.end(), 1);
  out.estimate = u_statistic(k, labels, na, nb);

  const int P = options.permutations;
  std::vector<double> null(static_cast<std::size_t>(P));
  std::atomic<int> next{0};
  const auto work = [&] {
    std::vector<unsigned char> perm = labels;
    for (int p = next++; p < P; p = next++) {
      std::mt19937_64 rng(derive_seed(options.seed, string_tag("mmd-permutation"),
                                      static_cast<std::uint64_t>(p)));
      perm = labels;
      std::shuffle(perm.begin(), perm.end(), rng);
      null[static_cast<std::size_t>(p)] = u_statistic(k, perm, na, nb);
    }
  };
  const int workers = std::max(1, std::min(options.workers, P));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  out.permutations = P;
  out.null95 = quantile(null, 0.95);
  out.null99 = quantile(null, 0.99);
  const auto exceed = std::count_if(null.begin(), null.end(), [&](double v) { return v >= out.estimate; });
  out.p_value = (1.0 + static_cast<double>(exceed)) / (1.0 + P);
  return out;
}

double mmd2_linear_biased(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mmd2_linear_biased: empty set");
  Vector ma = Vector::Zero(a.front().size());
  Vector mb = Vector::Zero(b.front().size());
  for (const Vector& v : a) ma += v;
  for (const Vector& v : b) mb += v;
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  return (ma - mb).squaredNorm();
}

}  // namespace pnpeval::metrics
