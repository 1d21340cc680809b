#include "pnpeval/prior_io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pnpeval::prior {

using nlohmann::json;

std::string encode_f64_base64(const double* data, std::size_t count) {
  std::vector<unsigned char> bytes(count * 8);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
  }
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::vector<double> decode_f64_base64(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length not a multiple of 4");
  std::vector<unsigned char> bytes(text.size() / 4 * 3);
  const int len = EVP_DecodeBlock(bytes.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
  if (len < 0) throw std::invalid_argument("base64: invalid input");
  // EVP_DecodeBlock does not strip the bytes produced by '=' padding.
  std::size_t size = static_cast<std::size_t>(len);
  if (!text.empty() && text.back() == '=') --size;
  if (text.size() > 1 && text[text.size() - 2] == '=') --size;
  if (size % 8 != 0) throw std::invalid_argument("base64: payload is not a whole number of f64");
  std::vector<double> out(size / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

namespace {

std::string encode(const Vector& v) {
  return encode_f64_base64(v.data(), static_cast<std::size_t>(v.size()));
}

Vector decode_vector(const json& node, Eigen::Index expected) {
  const std::vector<double> raw = decode_f64_base64(node.get<std::string>());
  if (static_cast<Eigen::Index>(raw.size()) != expected)
    throw std::invalid_argument("prior json: array has wrong length");
  return Eigen::Map<const Vector>(raw.data(), expected);
}

json covariance_json(const Covariance& c) {
  switch (c.form()) {
    case Covariance::Form::isotropic:
      return {{"form", "isotropic"}, {"variance", c.isotropic_variance()}};
    case Covariance::Form::diagonal:
      return {{"form", "diagonal"}, {"values", encode(c.eigenvalues())}};
    case Covariance::Form::full:
    default: {
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m = c.dense();
      return {{"form", "full"},
              {"matrix", encode_f64_base64(m.data(), static_cast<std::size_t>(m.size()))}};
    }
  }
}

Covariance covariance_from_json(const json& node, int dim) {
  const std::string form = node.at("form").get<std::string>();
  if (form == "isotropic") return Covariance::isotropic(dim, node.at("variance").get<double>());
  if (form == "diagonal") return Covariance::diagonal(decode_vector(node.at("values"), dim));
  if (form == "full") {
    const Vector flat = decode_vector(node.at("matrix"), static_cast<Eigen::Index>(dim) * dim);
    const Matrix m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(flat.data(), dim, dim);
    return Covariance::full(m);
  }
  throw std::invalid_argument("prior json: unknown covariance form '" + form + "'");
}

}  // namespace

json prior_to_json(const GmmPrior& prior) {
  json doc;
  doc["format"] = "pnpeval-gmm";
  doc["version"] = 1;
  doc["dim"] = prior.dim();
  doc["weights"] = prior.weights();
  json comps = json::array();
  for (int k = 0; k < prior.num_components(); ++k) {
    comps.push_back({{"mean", encode(prior.mean(k))}, {"covariance", covariance_json(prior.covariance(k))}});
  }
  doc["components"] = std::move(comps);
  return doc;
}

GmmPrior prior_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != "pnpeval-gmm")
      throw std::invalid_argument("prior json: missing or wrong format tag");
    const int dim = doc.at("dim").get<int>();
    if (dim < 1) throw std::invalid_argument("prior json: dim must be >= 1");
    std::vector<double> weights = doc.at("weights").get<std::vector<double>>();
    const json& comps = doc.at("components");
    if (comps.size() != weights.size())
      throw std::invalid_argument("prior json: weights and components differ in count");
    std::vector<Vector> means;
    std::vector<Covariance> covs;
    for (const json& c : comps) {
      means.push_back(decode_vector(c.at("mean"), dim));
      covs.push_back(covariance_from_json(c.at("covariance"), dim));
    }
    return GmmPrior(std::move(weights), std::move(means), std::move(covs));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("prior json: ") + e.what());
  }
}

void save_prior(const std::filesystem::path& path, const GmmPrior& prior, const json& provenance) {
  json doc = prior_to_json(prior);
  if (!provenance.is_null()) doc["provenance"] = provenance;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_prior: cannot open " + path.string());
  out << doc.dump(1) << '\n';
}

GmmPrior load_prior(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_prior: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("load_prior: " + std::string(e.what()));
  }
  return prior_from_json(doc);
}

}  // namespace pnpeval::prior
