#pragma once

#include <string>

#include "json.hpp"
#include "nogp/gp_regress.hpp"
#include "nogp/layer_cov.hpp"
#include "nogp/torus.hpp"

namespace nogp {

// JSON wire formats.
//
// SpectralFunction: { "band": [B_1, ...], "channels": d,
//                     "coeffs": [[re, im], ...] }   (row-major mode-then-channel)
// GridFunction:     { "sizes": [...], "channels": d, "values": [...] }
// NoGpConfig:       { "input_channels": J0, "oversample": k, "layers": [
//                       { "type": "fno", "band": B, "sigma_k2": v,
//                         "sigma_w2": w, "activation": "relu"|"identity"|null },
//                       { "type": "matern", "nu_x": ..., "lengthscale_x": [...],
//                         "nu_z": ..., "lengthscale_z": [...], "truncation": N,
//                         "sigma_k2": v, "sigma_w2": w, "activation": ... },
//                       { "type": "linear", "sigma_w2": w, "activation": ... } ] }
// GpHyperparams:    { "config": <NoGpConfig>, "noise_variance": s2 }
//
// nu = infinity is encoded as the string "inf".

nlohmann::json to_json(const SpectralFunction& f);
SpectralFunction spectral_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GridFunction& f);
GridFunction grid_function_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NoGpConfig& config);
NoGpConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GpHyperparams& hp);
GpHyperparams hyperparams_from_json(const nlohmann::json& j);

// Model files bind hyperparameters to the dataset they were fitted on.
void save_model(const GpHyperparams& hp, const std::string& dataset_hash,
                const std::string& path);
std::pair<GpHyperparams, std::string> load_model(const std::string& path);

// Flattened kernel matrix as CSV, row order (i major, p minor).
void export_kernel_csv(const BivariateKernel& K, const std::string& path);

}  // namespace nogp
