#include "nogp/dual_kernel.hpp"

#include <cmath>

#include "doctest.h"
#include "nogp/rng.hpp"
#include "nogp/torus.hpp"

using namespace nogp;

namespace {

// MC oracle: E[relu(b1) relu(b2)] for (b1, b2) centered Gaussian with
// covariance [[k11, k12], [k12, k22]], sampled through the Cholesky square
// root. Returns (mean, standard error).
std::pair<double, double> relu_moment_mc(double k11, double k12, double k22, long n, Rng& rng) {
  const double l11 = std::sqrt(k11);
  const double l21 = (l11 > 0.0) ? k12 / l11 : 0.0;
  const double l22 = std::sqrt(std::max(0.0, k22 - l21 * l21));
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double z1 = rng.normal(), z2 = rng.normal();
    const double b1 = l11 * z1;
    const double b2 = l21 * z1 + l22 * z2;
    const double prod = std::max(b1, 0.0) * std::max(b2, 0.0);
    sum += prod;
    sum2 += prod * prod;
  }
  const double mean = sum / n;
  const double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
  return {mean, se};
}

Eigen::MatrixXd random_psd(int n, Rng& rng) {
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
  return A * A.transpose() / n;
}

}  // namespace

TEST_SUITE_BEGIN("dual_kernel");

TEST_CASE("relu_dual closed-form anchor points") {
  CHECK(relu_dual(1.0, 1.0, 1.0) == doctest::Approx(0.5));
  CHECK(relu_dual(1.0, -1.0, 1.0) == doctest::Approx(0.0));
  CHECK(relu_dual(1.0, 0.0, 1.0) == doctest::Approx(1.0 / kTwoPi));
  CHECK(relu_dual(0.0, 0.0, 4.0) == 0.0);
  CHECK_THROWS_AS(relu_dual(-1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("relu_dual uncorrelated case against the MC oracle") {
  Rng rng(17);
  const auto [mean, se] = relu_moment_mc(1.0, 0.0, 1.0, 10'000'000, rng);
  CHECK(std::abs(relu_dual(1.0, 0.0, 1.0) - mean) < 3.0 * se);
}

TEST_CASE("relu_dual 1-homogeneity and half-diagonal identity") {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    const double k11 = rng.uniform(0.0, 4.0);
    const double k22 = rng.uniform(0.0, 4.0);
    const double rho = rng.uniform(-1.0, 1.0);
    const double k12 = rho * std::sqrt(k11 * k22);
    const double a = rng.uniform(0.01, 10.0);
    const double lhs = relu_dual(a * k11, a * k12, a * k22);
    const double rhs = a * relu_dual(k11, k12, k22);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    const double k = rng.uniform(0.0, 5.0);
    CHECK(relu_dual(k, k, k) == doctest::Approx(k / 2.0));
  }
}

TEST_CASE("apply_dual identity kind is exact") {
  Rng rng(29);
  const Eigen::MatrixXd K = random_psd(8, rng);
  const Eigen::MatrixXd out = apply_dual(ActivationKind::Identity, K);
  CHECK((out - K).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("apply_dual on the all-ones kernel gives all 1/2") {
  const Eigen::MatrixXd K = Eigen::MatrixXd::Ones(6, 6);
  const Eigen::MatrixXd out = apply_dual(ActivationKind::Relu, K);
  CHECK((out.array() - 0.5).abs().maxCoeff() < 1e-14);
}

TEST_CASE("apply_dual matches per-entry MC on a random PSD kernel") {
  Rng rng(31);
  const Eigen::MatrixXd K = random_psd(12, rng);
  const Eigen::MatrixXd out = apply_dual(ActivationKind::Relu, K);
  // spot-check a handful of entries with the bivariate MC oracle
  for (int rep = 0; rep < 8; ++rep) {
    const int r = static_cast<int>(rng.next_u64() % 12);
    const int c = static_cast<int>(rng.next_u64() % 12);
    Rng mc_rng = rng.split(rep);
    const auto [mean, se] = relu_moment_mc(K(r, r), K(r, c), K(c, c), 1'000'000, mc_rng);
    CHECK(std::abs(out(r, c) - mean) < 3.0 * std::max(se, 1e-12));
  }
}

TEST_CASE("apply_dual preserves symmetry, halves the diagonal, and keeps PSD") {
  Rng rng(37);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 4 + static_cast<int>(rng.next_u64() % 61);
    const Eigen::MatrixXd K = random_psd(n, rng);
    const Eigen::MatrixXd out = apply_dual(ActivationKind::Relu, K);
    CHECK((out - out.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    for (int i = 0; i < n; ++i) CHECK(out(i, i) == doctest::Approx(K(i, i) / 2.0));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * out.trace());
  }
}

TEST_CASE("apply_dual clamps tiny negative diagonals and rejects gross ones") {
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(3, 3);
  K(0, 0) = -5e-10;
  const Eigen::MatrixXd out = apply_dual(ActivationKind::Relu, K);
  CHECK(out(0, 0) == 0.0);
  K(0, 0) = -1e-3;
  CHECK_THROWS_AS(apply_dual(ActivationKind::Relu, K), std::invalid_argument);
}

TEST_SUITE_END();
