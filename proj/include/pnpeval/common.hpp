#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnpeval {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an iterative or closed-form computation produces a non-finite
/// value or a factorization breaks down.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by noise calibration when every sinogram is constant.
class DegenerateCalibration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by oracles restricted to low-dimensional problems.
class UnsupportedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> as_span(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

bool all_finite(const Vector& v);

/// log(sum(exp(values))) with the usual max shift. Returns -inf for an
/// all -inf input.
double log_sum_exp(std::span<const double> values);

/// In-place softmax of log-weights; returns the log normalizer.
double normalize_log_weights(std::vector<double>& log_weights);

/// SplitMix64 step; used to derive independent stream seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for stream `index` under `master`. Distinct (master, tag, index)
/// triples map to distinct, well-mixed seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0);

/// Stable 64-bit tag for a string (FNV-1a), used in seed derivation.
std::uint64_t string_tag(const std::string& s);

}  // namespace pnpeval
