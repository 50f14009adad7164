#pragma once

#include <cstdint>
#include <vector>

#include "nogp/fno_sim.hpp"
#include "nogp/layer_cov.hpp"

namespace nogp {

// Batch experiment protocols behind the CLI: the width-limit study and the
// layer-variance check, both on the single-hidden-layer architecture with a
// random band-limited input evaluated at x = 0.

// Hidden FNO layer (band B, kernel variance sigma_k2, skip sigma_w2, ReLU)
// followed by the scalar linear head with variance head_var.
NoGpConfig single_hidden_fno_config(int band, double sigma_k2, double sigma_w2, double head_var);

// Derived stream seed for a tagged sub-experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

struct LimitCheckRecord {
  int width = 0;
  long n_samples = 0;
  double tvd = 0.0;
  double mc_variance = 0.0;
  double analytic_variance = 0.0;
  std::uint64_t seed = 0;
};

struct LimitCheckResult {
  std::vector<LimitCheckRecord> records;
  double analytic_variance = 0.0;  // c_inf[f, f](0, 0)
};

// For each width J: n_samples draws of Z[f](0) under fresh parameters,
// binned TVD against N(0, c_inf[f,f](0,0)). The input function is a fixed
// uniform band-limited draw per seed.
LimitCheckResult run_limit_check(int band, const std::vector<int>& widths, long n_samples,
                                 std::uint64_t seed, int n_bins = 100);

struct VarianceCheckRow {
  long n_samples = 0;
  double mc_variance = 0.0;
  double analytic_variance = 0.0;
  double relative_error = 0.0;
};

// Monte Carlo variance of the single layer H[f](0) = A_k[f](0) + w f(0) over
// nested sample prefixes against the analytic layer covariance at (0, 0).
std::vector<VarianceCheckRow> run_variance_check(int band, const std::vector<long>& schedule,
                                                 std::uint64_t seed);

// Analytic c_inf[f, f](0, 0) for a configuration, via composition on an even
// grid containing the origin.
double analytic_variance_at_origin(const NoGpConfig& config, const SpectralFunction& f);

}  // namespace nogp
