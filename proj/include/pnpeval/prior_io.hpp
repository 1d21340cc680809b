#pragma once

// JSON form of a Gaussian mixture:
//
//   {"format": "pnpeval-gmm", "version": 1, "dim": n,
//    "weights": [w_0, ...],
//    "components": [{"mean": <b64>, "covariance": {"form": "isotropic", "variance": c}
//                                             | {"form": "diagonal", "values": <b64>}
//                                             | {"form": "full", "matrix": <b64, row-major>}}],
//    "provenance": {...}}            (optional)
//
// <b64> is base64 of little-endian f64 values.

#include "pnpeval/gmm_prior.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pnpeval::prior {

std::string encode_f64_base64(const double* data, std::size_t count);
std::vector<double> decode_f64_base64(const std::string& text);

nlohmann::json prior_to_json(const GmmPrior& prior);
/// Throws std::invalid_argument on malformed documents.
GmmPrior prior_from_json(const nlohmann::json& doc);

void save_prior(const std::filesystem::path& path, const GmmPrior& prior,
                const nlohmann::json& provenance = nullptr);
GmmPrior load_prior(const std::filesystem::path& path);

}  // namespace pnpeval::prior
