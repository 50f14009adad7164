#include "nogp/fno_sim.hpp"

#include <cmath>

#include "doctest.h"
#include "nogp/experiments.hpp"

using namespace nogp;

namespace {

SpectralFunction cosine_function(int t, int band) {
  SpectralFunction f({band}, 1);
  f.coeffs(f.mode_index({t}), 0) = Complex(0.5, 0.0);
  f.coeffs(f.mode_index({-t}), 0) = Complex(0.5, 0.0);
  return f;
}

// Quadrature oracle for the kernel integral A_k[f](y) = int k(y - x) f(x) dx.
double conv_quadrature(const SpectralFunction& k, const SpectralFunction& f, double y,
                       int nodes) {
  Eigen::MatrixXd pts(nodes, 1), shifted(nodes, 1);
  for (int i = 0; i < nodes; ++i) {
    pts(i, 0) = -kPi + kTwoPi * i / nodes;
    shifted(i, 0) = y - pts(i, 0);
  }
  const Eigen::VectorXd kv = evaluate_spectral(k, shifted).col(0);
  const Eigen::VectorXd fv = evaluate_spectral(f, pts).col(0);
  return kv.dot(fv) * kTwoPi / nodes;
}

// Single integral-only layer with a deterministic scalar kernel.
FnoParams single_kernel_params(const SpectralFunction& k,
                               std::optional<ActivationKind> act = std::nullopt) {
  FnoParams params;
  params.input_channels = 1;
  FnoLayerParams layer;
  layer.band = k.band;
  layer.kernel_hat.resize(k.n_modes());
  for (long idx = 0; idx < k.n_modes(); ++idx) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = k.coeffs(idx, 0);
    layer.kernel_hat[idx] = m;
  }
  layer.skip = Eigen::MatrixXd::Zero(1, 1);
  layer.activation = act;
  params.layers.push_back(layer);
  return params;
}

}  // namespace

TEST_SUITE_BEGIN("fno_sim");

TEST_CASE("sample_fno_params shapes and parameter count") {
  NoGpConfig config = single_hidden_fno_config(0, 1.0, 1.0, 1.0);
  Rng rng(3);
  const FnoParams params = sample_fno_params(config, {1, 1, 1}, rng);
  // one real kernel coefficient + one skip weight, plus the head weight
  CHECK(params.parameter_count() == 3);
  CHECK(params.layers[0].kernel_hat.size() == 1);
  CHECK(params.layers[0].kernel_hat[0](0, 0).imag() == 0.0);
  CHECK(params.conjugate_symmetry_defect() == 0.0);

  NoGpConfig wide = single_hidden_fno_config(3, 1.0 / 7.0, 1.0, 1.0);
  const FnoParams p2 = sample_fno_params(wide, {1, 5, 1}, rng);
  CHECK(p2.layers[0].kernel_hat.size() == 7);
  CHECK(p2.layers[0].kernel_hat[0].rows() == 5);
  CHECK(p2.layers[0].kernel_hat[0].cols() == 1);
  CHECK(p2.layers[1].skip.rows() == 1);
  CHECK(p2.layers[1].skip.cols() == 5);
  CHECK(p2.conjugate_symmetry_defect() == 0.0);

  CHECK_THROWS_AS(sample_fno_params(wide, {1, 5}, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_fno_params(wide, {2, 5, 1}, rng), std::invalid_argument);
}

TEST_CASE("sampled skip variance is sigma_w2 / J_in") {
  NoGpConfig config = single_hidden_fno_config(1, 1.0, 0.9, 1.0);
  const int j = 4;
  Rng rng(17);
  const int n = 20000;
  double sum2 = 0.0;
  long count = 0;
  for (int i = 0; i < n; ++i) {
    const FnoParams params = sample_fno_params(config, {1, j, 1}, rng);
    // head skip entries have variance 1 / j
    sum2 += params.layers[1].skip.array().square().sum();
    count += params.layers[1].skip.size();
  }
  const double var = sum2 / count;
  const double expected = 1.0 / j;
  CHECK(std::abs(var - expected) < 3.0 * expected * std::sqrt(2.0 / count));
}

TEST_CASE("eval_fno convolution against the quadrature oracle") {
  const int t = 2;
  const SpectralFunction k = cosine_function(t, t);
  const SpectralFunction f = cosine_function(t, t);
  const FnoParams params = single_kernel_params(k);
  const TorusGrid grid({9});
  const GridFunction out = eval_fno(params, f, grid);
  for (long p = 0; p < grid.total(); ++p) {
    const double y = grid.point(p)[0];
    CHECK(out.values(p, 0) == doctest::Approx(kPi * std::cos(t * y)).epsilon(1e-12));
    CHECK(std::abs(out.values(p, 0) - conv_quadrature(k, f, y, 4096)) < 1e-10);
  }
}

TEST_CASE("eval_fno constant-mode convolution identity") {
  SpectralFunction k({0}, 1);
  const double c0 = 0.35;
  k.coeffs(0, 0) = Complex(c0, 0.0);
  SpectralFunction f({0}, 1);
  const double a = -1.4;
  f.coeffs(0, 0) = Complex(a, 0.0);
  const GridFunction out = eval_fno(single_kernel_params(k), f, TorusGrid({5}));
  CHECK((out.values.array() - kTwoPi * c0 * a).abs().maxCoeff() < 1e-12);
  CHECK(std::abs(kTwoPi * c0 * a - conv_quadrature(k, f, 0.3, 4096)) < 1e-10);
}

TEST_CASE("zero parameters give zero output") {
  NoGpConfig config = single_hidden_fno_config(2, 1.0, 1.0, 1.0);
  Rng rng(5);
  FnoParams params = sample_fno_params(config, {1, 3, 1}, rng);
  for (auto& layer : params.layers) {
    for (auto& k : layer.kernel_hat) k.setZero();
    layer.skip.setZero();
  }
  const SpectralFunction f = cosine_function(1, 2);
  const GridFunction out = eval_fno(params, f, TorusGrid({7}));
  CHECK(out.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("eval_fno is linear in the input when no activation is present") {
  NoGpConfig config;
  config.input_channels = 1;
  LayerSpec layer;
  layer.integral = FnoSpec{{2}, 0.8};
  layer.sigma_w2 = 0.5;
  config.layers = {layer};
  Rng rng(7);
  const FnoParams params = sample_fno_params(config, {1, 1}, rng);
  const SpectralFunction f = sample_bandlimited_gp({2}, 1.0, 1, rng);
  const SpectralFunction g = sample_bandlimited_gp({2}, 1.0, 1, rng);
  SpectralFunction sum = f;
  sum.coeffs += g.coeffs;
  const TorusGrid grid({7});
  const Eigen::MatrixXd lhs = eval_fno(params, sum, grid).values;
  const Eigen::MatrixXd rhs =
      eval_fno(params, f, grid).values + eval_fno(params, g, grid).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("resolution invariance on Nyquist-satisfying grids") {
  NoGpConfig config = single_hidden_fno_config(3, 1.0 / 7.0, 1.0, 1.0);
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const FnoParams params = sample_fno_params(config, {1, 3, 1}, rng);
    const SpectralFunction f = sample_uniform_bandlimited({3}, rng);
    const GridFunction coarse = eval_fno(params, f, TorusGrid({7}));
    const GridFunction fine = eval_fno(params, f, TorusGrid({21}));
    for (long p = 0; p < 7; ++p)
      CHECK(std::abs(coarse.values(p, 0) - fine.values(3 * p, 0)) < 1e-10);
    // the point path agrees with the grid path at grid points
    const Eigen::VectorXd at = eval_fno_at(params, f, {coarse.grid.point(2)[0]});
    CHECK(std::abs(at(0) - coarse.values(2, 0)) < 1e-12);
  }
}

TEST_CASE("eval_fno rejects sub-Nyquist grids") {
  NoGpConfig config = single_hidden_fno_config(3, 1.0, 1.0, 1.0);
  Rng rng(13);
  const FnoParams params = sample_fno_params(config, {1, 2, 1}, rng);
  const SpectralFunction f = cosine_function(1, 3);
  CHECK_THROWS_AS(eval_fno(params, f, TorusGrid({5})), std::invalid_argument);
}

TEST_CASE("mc_output_samples determinism and centering") {
  NoGpConfig config = single_hidden_fno_config(3, 1.0 / 7.0, 1.0, 1.0);
  Rng rng(19);
  const SpectralFunction f = sample_uniform_bandlimited({3}, rng);

  const Eigen::VectorXd one = mc_output_samples(config, {1, 2, 1}, f, {0.0}, 1, 7);
  CHECK(one.size() == 1);

  const Eigen::VectorXd a = mc_output_samples(config, {1, 10, 1}, f, {0.0}, 500, 7);
  const Eigen::VectorXd b = mc_output_samples(config, {1, 10, 1}, f, {0.0}, 500, 7);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

  const long n = 100000;
  const Eigen::VectorXd big = mc_output_samples(config, {1, 10, 1}, f, {0.0}, n, 23);
  const double sd = std::sqrt((big.array() - big.mean()).square().sum() / n);
  CHECK(std::abs(big.mean()) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("mc variance approaches the analytic layer variance as width grows") {
  NoGpConfig config = single_hidden_fno_config(3, 1.0 / 7.0, 1.0, 1.0);
  Rng rng(29);
  const SpectralFunction f = sample_uniform_bandlimited({3}, rng);
  const double analytic = analytic_variance_at_origin(config, f);
  const long n = 40000;
  double err_small = 0.0, err_large = 0.0;
  {
    const Eigen::VectorXd s = mc_output_samples(config, {1, 1, 1}, f, {0.0}, n, 31);
    const double var = (s.array() - s.mean()).square().sum() / n;
    err_small = std::abs(var - analytic) / analytic;
  }
  {
    const Eigen::VectorXd s = mc_output_samples(config, {1, 500, 1}, f, {0.0}, n, 31);
    const double var = (s.array() - s.mean()).square().sum() / n;
    err_large = std::abs(var - analytic) / analytic;
  }
  // at J = 1 the dual-kernel limit is a poor description; at J = 500 the MC
  // variance should sit within a few percent of the analytic value
  CHECK(err_large < 0.05);
  CHECK(err_large < err_small);
}

TEST_CASE("tvd_to_gaussian calibration") {
  Rng rng(37);
  const long n = 1000000;
  Eigen::VectorXd exact(n);
  for (long i = 0; i < n; ++i) exact(i) = rng.normal(0.5, 2.0);
  CHECK(tvd_to_gaussian(exact, 0.5, 4.0, 100) < 0.01);

  Eigen::VectorXd far = Eigen::VectorXd::Constant(1000, 10.0);
  CHECK(tvd_to_gaussian(far, 0.0, 1.0, 100) > 0.99);

  // closed-form TVD between N(1,1) and N(0,1) is 2 Phi(1/2) - 1
  Eigen::VectorXd shifted(n);
  for (long i = 0; i < n; ++i) shifted(i) = rng.normal(1.0, 1.0);
  const double expected = std::erf(0.5 / std::sqrt(2.0));
  CHECK(std::abs(tvd_to_gaussian(shifted, 0.0, 1.0, 200) - expected) < 0.01);

  CHECK_THROWS_AS(tvd_to_gaussian(Eigen::VectorXd(), 0.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(tvd_to_gaussian(exact, 0.0, 0.0, 10), std::invalid_argument);
}

TEST_CASE("experiment protocols are deterministic per seed") {
  const auto a = run_limit_check(1, {1, 4}, 200, 5);
  const auto b = run_limit_check(1, {1, 4}, 200, 5);
  CHECK(a.analytic_variance == b.analytic_variance);
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].tvd == b.records[i].tvd);
    CHECK(a.records[i].mc_variance == b.records[i].mc_variance);
  }
  const auto v = run_variance_check(1, {50, 200}, 5);
  CHECK(v.size() == 2);
  CHECK(v[0].analytic_variance == v[1].analytic_variance);
}

TEST_SUITE_END();
