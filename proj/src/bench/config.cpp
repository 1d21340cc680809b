#include "pnpeval/bench.hpp"
#include "pnpeval/prior_io.hpp"
#include "pnpeval/tomo.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

namespace pnpeval::bench {

using nlohmann::json;

double ExperimentConfig::alpha_for(guidance::Method m) const {
  const auto it = alpha_scale.find(guidance::method_name(m));
  return it == alpha_scale.end() ? 1.0 : it->second;
}

int ExperimentConfig::detector_count() const {
  return detectors > 0 ? detectors : tomo::default_detector_count(side);
}

namespace {

const std::set<std::string> kKnownKeys{
    "side", "pixel_size", "detectors", "projections", "methods", "N", "K", "sigma_min",
    "sigma_max", "prior", "seed", "alpha_scale", "epsilon_denom", "mcg_pseudo_inverse",
    "mcg_projection", "pig_max_measurements", "workers", "mmd_permutations", "save_samples",
    "output_dir", "run_id", "sweep_N", "histogram_samples", "histogram_bins"};

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!kKnownKeys.count(it.key())) throw ConfigError("config: unknown field '" + it.key() + "'");

  ExperimentConfig cfg;
  read(doc, "side", cfg.side);
  read(doc, "pixel_size", cfg.pixel_size);
  read(doc, "detectors", cfg.detectors);
  read(doc, "projections", cfg.projections);
  read(doc, "N", cfg.N);
  read(doc, "K", cfg.K);
  read(doc, "sigma_min", cfg.sigma_min);
  if (doc.contains("sigma_max") && !doc.at("sigma_max").is_null()) {
    double v = 0.0;
    read(doc, "sigma_max", v);
    cfg.sigma_max = v;
  }
  read(doc, "seed", cfg.seed);
  read(doc, "epsilon_denom", cfg.epsilon_denom);
  read(doc, "mcg_projection", cfg.mcg_projection);
  read(doc, "pig_max_measurements", cfg.pig_max_measurements);
  read(doc, "workers", cfg.workers);
  read(doc, "mmd_permutations", cfg.mmd_permutations);
  read(doc, "save_samples", cfg.save_samples);
  read(doc, "output_dir", cfg.output_dir);
  read(doc, "run_id", cfg.run_id);
  read(doc, "sweep_N", cfg.sweep_N);
  read(doc, "histogram_samples", cfg.histogram_samples);
  read(doc, "histogram_bins", cfg.histogram_bins);
  read(doc, "alpha_scale", cfg.alpha_scale);

  try {
    if (doc.contains("methods")) {
      cfg.methods.clear();
      for (const std::string& m : doc.at("methods").get<std::vector<std::string>>())
        cfg.methods.push_back(guidance::parse_method(m));
    }
    if (doc.contains("mcg_pseudo_inverse"))
      cfg.mcg_pseudo_inverse = guidance::parse_pseudo_inverse(doc.at("mcg_pseudo_inverse").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const json::exception&) {
    throw ConfigError("config: 'methods' must be a list of strings");
  }

  if (doc.contains("prior")) {
    const json& p = doc.at("prior");
    if (!p.is_object()) throw ConfigError("config: 'prior' must be an object");
    for (auto it = p.begin(); it != p.end(); ++it)
      if (it.key() != "templates" && it.key() != "variance" && it.key() != "template_seed" &&
          it.key() != "file")
        throw ConfigError("config: unknown prior field '" + it.key() + "'");
    read(p, "templates", cfg.prior.templates);
    read(p, "variance", cfg.prior.variance);
    read(p, "template_seed", cfg.prior.template_seed);
    read(p, "file", cfg.prior.file);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config: parse error in " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

void validate(const ExperimentConfig& cfg) {
  const auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (cfg.side < 2) fail("side must be >= 2");
  if (!(cfg.pixel_size > 0.0)) fail("pixel_size must be > 0");
  if (cfg.detectors < 0) fail("detectors must be >= 0 (0 selects the default)");
  if (cfg.projections.empty()) fail("projections must not be empty");
  for (std::size_t i = 0; i < cfg.projections.size(); ++i) {
    if (cfg.projections[i] < 1) fail("projection counts must be positive");
    if (i > 0 && cfg.projections[i] <= cfg.projections[i - 1])
      fail("projections must be sorted ascending without duplicates");
  }
  if (cfg.methods.empty()) fail("methods must not be empty");
  for (guidance::Method m : cfg.methods)
    if (m == guidance::Method::none) fail("'none' is not a posterior method");
  std::set<guidance::Method> unique(cfg.methods.begin(), cfg.methods.end());
  if (unique.size() != cfg.methods.size()) fail("methods must not repeat");
  if (cfg.N < 2) fail("N must be >= 2");
  if (cfg.K < 2) fail("K must be >= 2");
  if (!(cfg.sigma_min > 0.0)) fail("sigma_min must be > 0");
  if (cfg.sigma_max && !(*cfg.sigma_max > cfg.sigma_min)) fail("sigma_min must be < sigma_max");
  if (cfg.prior.file.empty()) {
    if (cfg.prior.templates < 1) fail("prior.templates must be >= 1");
    if (!(cfg.prior.variance > 0.0)) fail("prior.variance must be > 0");
  }
  for (const auto& [name, a] : cfg.alpha_scale) {
    try {
      guidance::parse_method(name);
    } catch (const std::invalid_argument&) {
      fail("alpha_scale names unknown method '" + name + "'");
    }
    if (!(a >= 0.0)) fail("alpha_scale values must be >= 0");
  }
  if (!(cfg.epsilon_denom > 0.0)) fail("epsilon_denom must be > 0");
  if (cfg.pig_max_measurements < 1) fail("pig_max_measurements must be >= 1");
  if (cfg.workers < 1) fail("workers must be >= 1");
  if (cfg.mmd_permutations < 200) fail("mmd_permutations must be >= 200");
  if (cfg.run_id.empty() || cfg.run_id.find('/') != std::string::npos) fail("run_id must be a plain name");
  if (cfg.sweep_N < 2) fail("sweep_N must be >= 2");
  if (cfg.histogram_samples < 1) fail("histogram_samples must be >= 1");
  if (cfg.histogram_bins < 2) fail("histogram_bins must be >= 2");
}

json config_to_json(const ExperimentConfig& cfg) {
  std::vector<std::string> methods;
  for (guidance::Method m : cfg.methods) methods.push_back(guidance::method_name(m));
  json prior{{"templates", cfg.prior.templates},
             {"variance", cfg.prior.variance},
             {"template_seed", cfg.prior.template_seed}};
  if (!cfg.prior.file.empty()) prior["file"] = cfg.prior.file;
  return {{"side", cfg.side},
          {"pixel_size", cfg.pixel_size},
          {"detectors", cfg.detector_count()},
          {"projections", cfg.projections},
          {"methods", methods},
          {"N", cfg.N},
          {"K", cfg.K},
          {"sigma_min", cfg.sigma_min},
          {"sigma_max", cfg.sigma_max ? json(*cfg.sigma_max) : json(nullptr)},
          {"prior", prior},
          {"seed", cfg.seed},
          {"alpha_scale", cfg.alpha_scale},
          {"epsilon_denom", cfg.epsilon_denom},
          {"mcg_pseudo_inverse", guidance::pseudo_inverse_name(cfg.mcg_pseudo_inverse)},
          {"mcg_projection", cfg.mcg_projection},
          {"pig_max_measurements", cfg.pig_max_measurements},
          {"mmd_permutations", cfg.mmd_permutations},
          {"save_samples", cfg.save_samples},
          {"run_id", cfg.run_id},
          {"sweep_N", cfg.sweep_N},
          {"histogram_samples", cfg.histogram_samples},
          {"histogram_bins", cfg.histogram_bins}};
}

std::filesystem::path run_directory(const ExperimentConfig& cfg) {
  const char* env = std::getenv("BENCH_OUT");
  const std::filesystem::path root = (env && *env) ? std::filesystem::path(env) : std::filesystem::path(cfg.output_dir);
  return root / cfg.run_id;
}

prior::GmmPrior build_prior(const ExperimentConfig& cfg) {
  if (!cfg.prior.file.empty()) {
    prior::GmmPrior p = prior::load_prior(cfg.prior.file);
    if (p.dim() != cfg.side * cfg.side)
      throw ConfigError("config: prior file dimension does not match side^2");
    return p;
  }
  const tomo::ImageGrid grid(cfg.side, cfg.pixel_size);
  return prior::make_prior_from_templates(
      prior::make_phantoms(grid, cfg.prior.templates, cfg.prior.template_seed), cfg.prior.variance);
}

double resolved_sigma_max(const ExperimentConfig& cfg, const prior::GmmPrior& prior) {
  const double s = cfg.sigma_max ? *cfg.sigma_max : 10.0 * prior.std_envelope();
  if (!(s > cfg.sigma_min)) throw ConfigError("config: sigma_min must be < sigma_max");
  return s;
}

std::uint64_t cell_seed(std::uint64_t master, guidance::Method method, int p) {
  return derive_seed(master, string_tag("chains/" + guidance::method_name(method)),
                     static_cast<std::uint64_t>(p));
}

}  // namespace pnpeval::bench
