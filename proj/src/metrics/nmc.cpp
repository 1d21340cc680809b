#include "pnpeval/metrics.hpp"

namespace pnpeval::metrics {

double nmc(const std::vector<Vector>& samples, const std::vector<Vector>& sinograms,
           const tomo::LinearOperator& op, double sigma_y) {
  if (samples.empty()) throw std::invalid_argument("nmc: empty sample list");
  if (samples.size() != sinograms.size())
    throw std::invalid_argument("nmc: samples and sinograms must be paired");
  if (!(sigma_y > 0.0)) throw std::invalid_argument("nmc: sigma_y must be > 0");
  const int m = op.output_dim();
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != op.input_dim() || sinograms[i].size() != m)
      throw std::invalid_argument("nmc: dimension mismatch");
    acc += (sinograms[i] - op.forward(samples[i])).squaredNorm();
  }
  return acc / (static_cast<double>(samples.size()) * m * sigma_y * sigma_y);
}

double nmc(const std::vector<Vector>& samples, const std::vector<Vector>& sinograms,
           const tomo::ObservationModel& obs) {
  return nmc(samples, sinograms, obs.op(), obs.sigma_y());
}

}  // namespace pnpeval::metrics
