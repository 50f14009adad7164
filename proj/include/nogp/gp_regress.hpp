#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nogp/layer_cov.hpp"
#include "nogp/torus.hpp"

namespace nogp {

// Exact GP regression over function pairs with the composed neural-operator
// covariance: Gram assembly, marginal likelihood, quasi-Newton hyperparameter
// fitting, posterior prediction, and L2 evaluation.

struct FunctionDataset {
  TorusGrid grid;
  std::vector<GridFunction> inputs;   // channels = input_channels
  std::vector<GridFunction> targets;  // scalar
  std::vector<std::string> names;

  // Source interval mapped affinely onto [-pi, pi); identity for native data.
  std::array<double, 2> domain_map{-kPi, kPi};
  // Generation seeds when the dataset is synthetic.
  std::uint64_t data_seed = 0;
  std::uint64_t truth_seed = 0;
  bool has_seeds = false;

  [[nodiscard]] int n() const { return static_cast<int>(inputs.size()); }
  [[nodiscard]] int input_channels() const { return inputs.empty() ? 1 : inputs[0].channels; }
  void validate() const;

  [[nodiscard]] FunctionDataset select(const std::vector<int>& indices) const;
};

struct GpHyperparams {
  NoGpConfig config;
  double noise_variance = 1e-4;
};

// Full-band spectral representations of the dataset inputs (the band-(m-1)/2
// trigonometric interpolants through the grid values).
std::vector<SpectralFunction> dataset_spectra(const FunctionDataset& ds);

// M[(i,p), (j,q)] = c_inf[f_i, f_j](x_p, x_q) plus base jitter
// 1e-8 * mean(diagonal) on the diagonal. Throws std::runtime_error naming the
// first offending index on non-finite kernel entries.
Eigen::MatrixXd build_gram(const GpHyperparams& hp, const FunctionDataset& ds);

// -(1/2) y^T (K + s2 I)^-1 y - (1/2) log det(K + s2 I) - (nm/2) log 2pi,
// via Cholesky with jitter escalation 1e-8 -> 1e-6 -> 1e-4 of the mean
// diagonal (hard std::runtime_error beyond).
double log_marginal_likelihood(const GpHyperparams& hp, const FunctionDataset& ds);

struct FitResult {
  GpHyperparams hp;
  double objective = 0.0;
  bool converged = false;
  int n_evals = 0;
};

// Maximizes the log marginal likelihood over the log of every positive
// hyperparameter (variances, Matern lengthscales, noise; nu and truncation
// stay fixed) by L-BFGS with central finite-difference gradients
// (step 1e-5 in log space). `budget` caps the number of objective
// evaluations; the best evaluated iterate is returned.
FitResult fit_hyperparams(const FunctionDataset& ds, const GpHyperparams& init, int budget);

struct Posterior {
  GridFunction mean;
  Eigen::MatrixXd cov;  // m x m over grid points
};

Posterior posterior_predict(const GpHyperparams& hp, const FunctionDataset& ds,
                            const GridFunction& f_star);

// Posterior means for several test inputs through one joint kernel assembly.
std::vector<GridFunction> posterior_mean_batch(const GpHyperparams& hp,
                                               const FunctionDataset& ds,
                                               const std::vector<GridFunction>& stars);

// (absolute, relative) empirical L2 norms of pred - truth:
//   absolute = sqrt(prod_j (2pi/m_j) * sum_p (pred - truth)^2(x_p)).
std::pair<double, double> l2_error(const GridFunction& pred, const GridFunction& truth);

struct CvFold {
  std::vector<int> test_indices;
  double mean_abs = 0.0;
  double mean_rel = 0.0;
  GpHyperparams fitted;
  double fit_objective = 0.0;
  double wall_seconds = 0.0;
};

struct CvResult {
  std::vector<CvFold> folds;
  double mean_abs = 0.0, std_abs = 0.0;
  double mean_rel = 0.0, std_rel = 0.0;
};

// Deterministic shuffled k-fold split per seed; each fold is fitted on the
// remaining folds and scored on the held-out functions.
CvResult cross_validate(const FunctionDataset& ds, const GpHyperparams& init, int k_folds,
                        int budget, std::uint64_t seed);

}  // namespace nogp
