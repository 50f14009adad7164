#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "nogp/layer_cov.hpp"
#include "nogp/rng.hpp"
#include "nogp/torus.hpp"

namespace nogp {

// Finite-width simulator for band-limited FNO architectures: parameter
// sampling under the scaled Gaussian priors, forward evaluation through the
// convolution theorem, and Monte Carlo estimation of output statistics.

struct FnoLayerParams {
  // Spectral kernel coefficients, one (J_out x J_in) matrix per mode of the
  // band cube; empty band means a point-wise linear layer.
  std::vector<int> band;
  std::vector<Eigen::MatrixXcd> kernel_hat;
  Eigen::MatrixXd skip;  // J_out x J_in
  std::optional<ActivationKind> activation;

  [[nodiscard]] bool has_integral() const { return !band.empty(); }
};

struct FnoParams {
  int input_channels = 1;
  std::vector<FnoLayerParams> layers;

  // Maximum conjugate-symmetry violation across all sampled kernels.
  [[nodiscard]] double conjugate_symmetry_defect() const;
  [[nodiscard]] long parameter_count() const;
};

// Draw network parameters for the given widths [J_0, ..., J_D]:
// kernel coefficient variance sigma_k2 / J_{l-1} per scalar kernel (with
// conjugate pairs tied), skip entries i.i.d. N(0, sigma_w2 / J_{l-1}).
// Matern-parametrized layers are not simulated; they throw.
FnoParams sample_fno_params(const NoGpConfig& config, const std::vector<int>& widths, Rng& rng);

// Forward evaluation on a grid. The pass stays spectral while the state is
// exactly band-limited and drops to grid values at the first activation;
// integral layers after an activation read their input modes from the
// discrete transform of the internal working grid (`oversample` times the
// output grid). Throws std::invalid_argument when the output grid violates
// Nyquist for the input or any kernel band.
GridFunction eval_fno(const FnoParams& params, const SpectralFunction& f, const TorusGrid& grid,
                      int oversample = 4);

// Exact point evaluation for architectures whose activations are followed
// only by point-wise layers (in particular any single-hidden-layer model).
// Throws std::logic_error otherwise.
Eigen::VectorXd eval_fno_at(const FnoParams& params, const SpectralFunction& f,
                            const std::vector<double>& x);

// n_samples independent evaluations of Z[f](x) under freshly drawn
// parameters; replicas use split generator streams so the result is
// deterministic per seed regardless of thread count.
Eigen::VectorXd mc_output_samples(const NoGpConfig& config, const std::vector<int>& widths,
                                  const SpectralFunction& f, const std::vector<double>& x,
                                  long n_samples, std::uint64_t seed);

// Joint grid outputs across several inputs under shared parameter draws;
// row r holds [Z_r[f_1](x_1..x_m), ..., Z_r[f_n](x_1..x_m)]. The Monte Carlo
// engine behind empirical-covariance checks.
Eigen::MatrixXd mc_grid_outputs(const NoGpConfig& config, const std::vector<int>& widths,
                                const std::vector<SpectralFunction>& fs, const TorusGrid& grid,
                                long n_samples, std::uint64_t seed);

// Binned total variation distance between the sample set and N(mu, var):
// n_bins equispaced bins over [mu - 6 sd, mu + 6 sd] plus two tail bins.
// Throws std::invalid_argument on an empty sample list or var <= 0.
double tvd_to_gaussian(const Eigen::VectorXd& samples, double mu, double var, int n_bins = 100);

}  // namespace nogp
