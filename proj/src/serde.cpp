#include "nogp/serde.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>

namespace nogp {

namespace {

using nlohmann::json;

json nu_to_json(double nu) {
  if (std::isinf(nu)) return "inf";
  return nu;
}

double nu_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("config: nu must be a number or \"inf\"");
  }
  return j.get<double>();
}

json activation_to_json(const std::optional<ActivationKind>& act) {
  if (!act) return nullptr;
  return *act == ActivationKind::Relu ? "relu" : "identity";
}

std::optional<ActivationKind> activation_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  const std::string name = j.get<std::string>();
  if (name == "relu") return ActivationKind::Relu;
  if (name == "identity") return ActivationKind::Identity;
  throw std::invalid_argument("config: unknown activation '" + name + "'");
}

std::vector<int> band_from_json(const json& j) {
  if (j.is_number_integer()) return {j.get<int>()};
  return j.get<std::vector<int>>();
}

json band_to_json(const std::vector<int>& band) {
  if (band.size() == 1) return band[0];
  return band;
}

}  // namespace

json to_json(const SpectralFunction& f) {
  json coeffs = json::array();
  for (long idx = 0; idx < f.n_modes(); ++idx)
    for (int p = 0; p < f.channels; ++p)
      coeffs.push_back({f.coeffs(idx, p).real(), f.coeffs(idx, p).imag()});
  return {{"band", f.band}, {"channels", f.channels}, {"coeffs", coeffs}};
}

SpectralFunction spectral_from_json(const json& j) {
  SpectralFunction f(j.at("band").get<std::vector<int>>(), j.at("channels").get<int>());
  const auto& coeffs = j.at("coeffs");
  if (static_cast<long>(coeffs.size()) != f.n_modes() * f.channels)
    throw std::invalid_argument("SpectralFunction: coefficient count mismatch");
  long flat = 0;
  for (long idx = 0; idx < f.n_modes(); ++idx)
    for (int p = 0; p < f.channels; ++p, ++flat)
      f.coeffs(idx, p) = Complex(coeffs[flat][0].get<double>(), coeffs[flat][1].get<double>());
  return f;
}

json to_json(const GridFunction& f) {
  json values = json::array();
  for (long k = 0; k < f.values.rows(); ++k)
    for (int p = 0; p < f.channels; ++p) values.push_back(f.values(k, p));
  return {{"sizes", f.grid.sizes}, {"channels", f.channels}, {"values", values}};
}

GridFunction grid_function_from_json(const json& j) {
  GridFunction f(TorusGrid(j.at("sizes").get<std::vector<int>>()), j.at("channels").get<int>());
  const auto& values = j.at("values");
  if (static_cast<long>(values.size()) != f.values.size())
    throw std::invalid_argument("GridFunction: value count mismatch");
  long flat = 0;
  for (long k = 0; k < f.values.rows(); ++k)
    for (int p = 0; p < f.channels; ++p, ++flat) f.values(k, p) = values[flat].get<double>();
  f.validate();
  return f;
}

json to_json(const NoGpConfig& config) {
  json layers = json::array();
  for (const auto& layer : config.layers) {
    json entry;
    if (const auto* fno = std::get_if<FnoSpec>(&layer.integral)) {
      entry["type"] = "fno";
      entry["band"] = band_to_json(fno->band);
      entry["sigma_k2"] = fno->sigma_k2;
    } else if (const auto* mat = std::get_if<ToroidalMaternSpec>(&layer.integral)) {
      entry["type"] = "matern";
      entry["nu_x"] = nu_to_json(mat->nu_x);
      entry["lengthscale_x"] = mat->ell_x;
      entry["nu_z"] = nu_to_json(mat->nu_z);
      entry["lengthscale_z"] = mat->ell_z;
      entry["truncation"] = mat->truncation;
      entry["sigma_k2"] = mat->sigma_k2;
    } else {
      entry["type"] = "linear";
    }
    entry["sigma_w2"] = layer.sigma_w2;
    entry["activation"] = activation_to_json(layer.activation);
    layers.push_back(entry);
  }
  return {{"input_channels", config.input_channels},
          {"oversample", config.oversample},
          {"layers", layers}};
}

NoGpConfig config_from_json(const json& j) {
  NoGpConfig config;
  config.input_channels = j.value("input_channels", 1);
  config.oversample = j.value("oversample", 4);
  for (const auto& entry : j.at("layers")) {
    LayerSpec layer;
    const std::string type = entry.at("type").get<std::string>();
    if (type == "fno") {
      FnoSpec fno;
      fno.band = band_from_json(entry.at("band"));
      fno.sigma_k2 = entry.at("sigma_k2").get<double>();
      layer.integral = fno;
    } else if (type == "matern") {
      ToroidalMaternSpec mat;
      mat.nu_x = nu_from_json(entry.at("nu_x"));
      mat.ell_x = entry.at("lengthscale_x").get<std::vector<double>>();
      mat.nu_z = nu_from_json(entry.at("nu_z"));
      mat.ell_z = entry.at("lengthscale_z").get<std::vector<double>>();
      mat.truncation = entry.value("truncation", 128);
      mat.sigma_k2 = entry.at("sigma_k2").get<double>();
      layer.integral = mat;
    } else if (type != "linear") {
      throw std::invalid_argument("config: unknown layer type '" + type + "'");
    }
    layer.sigma_w2 = entry.value("sigma_w2", 0.0);
    layer.activation = activation_from_json(entry.value("activation", json(nullptr)));
    config.layers.push_back(std::move(layer));
  }
  config.validate();
  return config;
}

json to_json(const GpHyperparams& hp) {
  return {{"config", to_json(hp.config)}, {"noise_variance", hp.noise_variance}};
}

GpHyperparams hyperparams_from_json(const json& j) {
  GpHyperparams hp;
  hp.config = config_from_json(j.at("config"));
  hp.noise_variance = j.at("noise_variance").get<double>();
  return hp;
}

void save_model(const GpHyperparams& hp, const std::string& dataset_hash,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  const json j = {{"hyperparams", to_json(hp)}, {"dataset_hash", dataset_hash}};
  out << j.dump(2) << '\n';
}

std::pair<GpHyperparams, std::string> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  json j;
  try {
    in >> j;
    return {hyperparams_from_json(j.at("hyperparams")),
            j.at("dataset_hash").get<std::string>()};
  } catch (const json::exception& e) {
    throw std::runtime_error("load_model: malformed file: " + std::string(e.what()));
  }
}

void export_kernel_csv(const BivariateKernel& K, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_kernel_csv: cannot open " + path);
  char buf[64];
  for (long r = 0; r < K.values.rows(); ++r) {
    for (long c = 0; c < K.values.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", K.values(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace nogp
