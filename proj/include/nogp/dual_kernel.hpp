#pragma once

#include <Eigen/Dense>

namespace nogp {

enum class ActivationKind { Identity, Relu };

// Dual kernel of ReLU (order-1 arc-cosine form): the covariance
// E[relu(b1) relu(b2)] of a centered bivariate Gaussian with marginal
// variances k11, k22 and cross-covariance k12,
//
//   (1 / 2pi) sqrt(k11 k22) (sin t + (pi - t) cos t),  cos t = k12 / sqrt(k11 k22).
//
// cos t is clamped into [-1, 1] (|k12| may exceed the Cauchy-Schwarz bound by
// up to 1e-9 of rounding slack); a vanishing k11*k22 yields 0. Negative
// variances throw std::invalid_argument.
double relu_dual(double k11, double k12, double k22);

// Entry-wise dual-kernel map over a flattened bivariate kernel matrix:
//   K'[r, c] = dual(K[r, r], K[r, c], K[c, c]).
// Tiny negative diagonals (>= -1e-9) are clamped to zero before use;
// Identity returns the input unchanged. Symmetry of K is preserved.
Eigen::MatrixXd apply_dual(ActivationKind kind, const Eigen::MatrixXd& K);

}  // namespace nogp
