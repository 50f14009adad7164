#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "nogp/dual_kernel.hpp"
#include "nogp/torus.hpp"

namespace nogp {

// Analytic covariance maps of infinite-width neural-operator layers and their
// composition into the limit kernel. A bivariate kernel holds the block
// tensor K[i, j, p, q] = c[f_i, f_j](x_p, x_q) over function pairs (i, j) and
// grid-point pairs (p, q), flattened to an (n m) x (n m) matrix with i major
// and p minor.
struct BivariateKernel {
  int n_functions = 0;
  TorusGrid grid;
  Eigen::MatrixXd values;

  BivariateKernel() = default;
  BivariateKernel(int n_functions_, TorusGrid grid_);

  [[nodiscard]] long points() const { return grid.total(); }
  [[nodiscard]] long size() const { return n_functions * points(); }

  [[nodiscard]] Eigen::Block<Eigen::MatrixXd> block(int i, int j);
  [[nodiscard]] Eigen::Block<const Eigen::MatrixXd> block(int i, int j) const;

  // max |K[i,j,p,q] - K[j,i,q,p]|, i.e. asymmetry of the flattened matrix.
  [[nodiscard]] double symmetry_defect() const;
};

// One neural-operator layer in the infinite-width limit.
struct FnoSpec {
  std::vector<int> band;
  double sigma_k2 = 1.0;
};

struct ToroidalMaternSpec {
  double nu_x = 1.5;
  std::vector<double> ell_x;
  double nu_z = 1.5;
  std::vector<double> ell_z;
  int truncation = 128;
  double sigma_k2 = 1.0;
};

struct LayerSpec {
  // monostate: point-wise linear layer only (lift / projection / head).
  std::variant<std::monostate, FnoSpec, ToroidalMaternSpec> integral;
  double sigma_w2 = 0.0;
  std::optional<ActivationKind> activation;

  [[nodiscard]] bool has_integral() const {
    return !std::holds_alternative<std::monostate>(integral);
  }
};

struct NoGpConfig {
  int input_channels = 1;
  std::vector<LayerSpec> layers;
  // Refinement factor of the internal grid used for post-activation Fourier
  // analysis in compositions with more than one integral layer.
  int oversample = 4;

  [[nodiscard]] int depth() const { return static_cast<int>(layers.size()); }
  void validate() const;  // throws std::invalid_argument
};

// Empirical covariance of the inputs: K[i, j, p, q] = f_j(x_q)^T f_i(x_p) / J0.
BivariateKernel input_cov(const std::vector<SpectralFunction>& fs, const TorusGrid& grid,
                          int input_channels);
BivariateKernel input_cov(const std::vector<GridFunction>& fs, int input_channels);

// Covariance map of the FNO kernel integral operator: per block,
//   out[p, q] = sigma_k2 (2pi)^{2d} sum_{|s|<=B} Hhat(s, -s) exp(i s.(x_p - x_q)),
// where Hhat(s, t) are the two-argument discrete Fourier coefficients of the
// block on the grid. Requires m_j >= 2 B_j + 1; throws std::invalid_argument
// below Nyquist.
BivariateKernel fno_integral_cov(const BivariateKernel& H, const std::vector<int>& band,
                                 double sigma_k2);

// Matern spectral density on the circle, per-dimension factor:
//   nu = inf : exp(-ell^2 lambda / 2)
//   else    : (2 nu / ell^2 + lambda)^(-nu - 1/2)
double matern_spectral_density(double lambda, double nu, double ell);

// Estimated omitted mass sum_{|n| > N} chat(n^2; nu, ell) by integral
// comparison; the truncation-quality guard for the series evaluations.
double matern_truncation_tail(double nu, double ell, int truncation);

// Tensor-product toroidal Matern kernel, truncated series:
//   c(x, x') = prod_j (2pi)^-1 sum_{|n|<=N} exp(-i n (x_j - x_j')) chat(n^2; nu, ell_j).
// Throws std::runtime_error if the omitted tail exceeds 1e-6 of the retained
// spectral mass in any dimension.
double matern_kernel_eval(const std::vector<double>& x, const std::vector<double>& y,
                          double nu, const std::vector<double>& ell, int truncation);

// Covariance map of the toroidal Matern integral operator: per block,
//   out[p, q] = sigma_k2 (2pi)^d c(x_p, x_q; nu_z, ell_z)
//               * sum_{|n|<=N} Hhat(n, -n) prod_j chat(n_j^2; nu_x, ell_xj),
// with the mode sum additionally capped at the grid Nyquist band (warning on
// stderr when the cap bites).
BivariateKernel matern_integral_cov(const BivariateKernel& H, const ToroidalMaternSpec& spec);

// Conditional covariance map of one layer: integral term plus sigma_w2 * H,
// followed by the activation dual kernel when configured.
BivariateKernel layer_cov_map(const BivariateKernel& H, const LayerSpec& spec);

// Depth-D composition: the covariance function of the infinite-width neural
// operator evaluated across all input pairs on the grid. Internally works on
// a refined grid when a layer band exceeds the grid Nyquist limit or when an
// integral layer follows an activation (oversample factor), restricting back
// to the data grid at the end.
BivariateKernel compose_covariance(const NoGpConfig& config,
                                   const std::vector<SpectralFunction>& fs,
                                   const TorusGrid& grid);

}  // namespace nogp
