#include "pnpeval/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace pnpeval::guidance {

NoiseSchedule make_schedule(double sigma_min, double sigma_max, int num_scales) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max))
    throw std::invalid_argument("make_schedule: need 0 < sigma_min < sigma_max");
  if (num_scales < 2) throw std::invalid_argument("make_schedule: need at least 2 noise scales");
  NoiseSchedule s{sigma_min, sigma_max, std::vector<double>(static_cast<std::size_t>(num_scales))};
  const double log_ratio = std::log(sigma_max / sigma_min);
  for (int i = 0; i < num_scales; ++i) {
    const double t = static_cast<double>(num_scales - 1 - i) / (num_scales - 1);
    s.sigmas[static_cast<std::size_t>(i)] = sigma_min * std::exp(t * log_ratio);
  }
  s.sigmas.front() = sigma_max;
  s.sigmas.back() = sigma_min;
  return s;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::mcg: return "mcg";
    case Method::dps: return "dps";
    case Method::pig: return "pig";
    case Method::exact: return "exact";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::none, Method::mcg, Method::dps, Method::pig, Method::exact})
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown guidance method '" + name + "'");
}

std::string pseudo_inverse_name(PseudoInverse p) { return p == PseudoInverse::fbp ? "fbp" : "dense"; }

PseudoInverse parse_pseudo_inverse(const std::string& name) {
  if (name == "fbp") return PseudoInverse::fbp;
  if (name == "dense") return PseudoInverse::dense;
  throw std::invalid_argument("unknown pseudo-inverse '" + name + "'");
}

void GuidanceConfig::validate() const {
  if (!(alpha_scale >= 0.0) || !std::isfinite(alpha_scale))
    throw std::invalid_argument("GuidanceConfig: alpha_scale must be finite and >= 0");
  if (!(epsilon_denom > 0.0)) throw std::invalid_argument("GuidanceConfig: epsilon_denom must be > 0");
}

double pig_default_variance(double sigma_t) {
  const double s2 = sigma_t * sigma_t;
  return s2 / (s2 + 1.0);
}

}  // namespace pnpeval::guidance
