#include "nogp/layer_cov.hpp"

#include <cmath>

#include "doctest.h"
#include "nogp/rng.hpp"

using namespace nogp;

namespace {

SpectralFunction cosine_function(int t, int band) {
  SpectralFunction f({band}, 1);
  f.coeffs(f.mode_index({t}), 0) = Complex(0.5, 0.0);
  f.coeffs(f.mode_index({-t}), 0) = Complex(0.5, 0.0);
  return f;
}

SpectralFunction sine_function(int t, int band) {
  SpectralFunction f({band}, 1);
  f.coeffs(f.mode_index({t}), 0) = Complex(0.0, -0.5);
  f.coeffs(f.mode_index({-t}), 0) = Complex(0.0, 0.5);
  return f;
}

SpectralFunction constant_function(double c) {
  SpectralFunction f({0}, 1);
  f.coeffs(0, 0) = Complex(c, 0.0);
  return f;
}

// Shift-invariant FNO kernel covariance c_k(t) = sigma_k2 sum_{|s|<=B} cos(s t).
double fno_kernel_cov(double t, int band, double sigma_k2) {
  double acc = 1.0;
  for (int s = 1; s <= band; ++s) acc += 2.0 * std::cos(s * t);
  return sigma_k2 * acc;
}

// Quadrature oracle for the defining double integral of the FNO covariance
// map: out(z, z') = iint c_k(z - x, z' - x') f1(x) f2(x') dx dx', by the
// composite trapezoid rule at nodes^2 points (1D domain).
double fno_cov_quadrature(const SpectralFunction& f1, const SpectralFunction& f2, double z1,
                          double z2, int band, double sigma_k2, int nodes) {
  Eigen::MatrixXd pts(nodes, 1);
  for (int k = 0; k < nodes; ++k) pts(k, 0) = -kPi + kTwoPi * k / nodes;
  const Eigen::VectorXd v1 = evaluate_spectral(f1, pts).col(0);
  const Eigen::VectorXd v2 = evaluate_spectral(f2, pts).col(0);
  double acc = 0.0;
  for (int a = 0; a < nodes; ++a) {
    const double u1 = z1 - pts(a, 0);
    double inner = 0.0;
    for (int b = 0; b < nodes; ++b) {
      inner += fno_kernel_cov(u1 - (z2 - pts(b, 0)), band, sigma_k2) * v2(b);
    }
    acc += inner * v1(a);
  }
  const double step = kTwoPi / nodes;
  return acc * step * step;
}

// Independent series evaluation of the 1D toroidal Matern kernel.
double matern_series_1d(double delta, double nu, double ell, int truncation) {
  double acc = matern_spectral_density(0.0, nu, ell);
  for (int n = 1; n <= truncation; ++n)
    acc += 2.0 * matern_spectral_density(static_cast<double>(n) * n, nu, ell) * std::cos(n * delta);
  return acc / kTwoPi;
}

// Quadrature oracle for the toroidal Matern covariance map with the explicit
// product kernel sigma_k2 c(z,z'; nu_z) c(x,x'; nu_x).
double matern_cov_quadrature(const SpectralFunction& f1, const SpectralFunction& f2, double z1,
                             double z2, const ToroidalMaternSpec& spec, int nodes) {
  Eigen::MatrixXd pts(nodes, 1);
  for (int k = 0; k < nodes; ++k) pts(k, 0) = -kPi + kTwoPi * k / nodes;
  const Eigen::VectorXd v1 = evaluate_spectral(f1, pts).col(0);
  const Eigen::VectorXd v2 = evaluate_spectral(f2, pts).col(0);
  // c_x depends only on the lag; precompute over the difference lattice
  std::vector<double> cx(nodes);
  for (int k = 0; k < nodes; ++k)
    cx[k] = matern_series_1d(kTwoPi * k / nodes, spec.nu_x, spec.ell_x[0], spec.truncation);
  double acc = 0.0;
  for (int a = 0; a < nodes; ++a) {
    double inner = 0.0;
    for (int b = 0; b < nodes; ++b) {
      int lag = a - b;
      if (lag < 0) lag += nodes;
      inner += cx[lag] * v2(b);
    }
    acc += inner * v1(a);
  }
  const double step = kTwoPi / nodes;
  const double cz = matern_series_1d(z1 - z2, spec.nu_z, spec.ell_z[0], spec.truncation);
  return spec.sigma_k2 * cz * acc * step * step;
}

NoGpConfig paper_architecture(int band, double sigma_k2, double sigma_w2, double head_var) {
  NoGpConfig config;
  config.input_channels = 1;
  LayerSpec hidden;
  hidden.integral = FnoSpec{{band}, sigma_k2};
  hidden.sigma_w2 = sigma_w2;
  hidden.activation = ActivationKind::Relu;
  LayerSpec head;
  head.sigma_w2 = head_var;
  config.layers = {hidden, head};
  return config;
}

}  // namespace

TEST_SUITE_BEGIN("layer_cov");

TEST_CASE("input_cov of the constant input is the all-ones kernel") {
  const TorusGrid grid({7});
  const BivariateKernel K = input_cov({constant_function(1.0)}, grid, 1);
  CHECK((K.values.array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("input_cov cross block of cos and sin") {
  const TorusGrid grid({8});
  const BivariateKernel K = input_cov({cosine_function(1, 1), sine_function(1, 1)}, grid, 1);
  for (int p = 0; p < 8; ++p)
    for (int q = 0; q < 8; ++q) {
      const double xp = grid.point(p)[0], xq = grid.point(q)[0];
      CHECK(K.block(0, 1)(p, q) == doctest::Approx(std::sin(xq) * std::cos(xp)).epsilon(1e-12));
    }
}

TEST_CASE("input_cov matches the pairwise inner product oracle per block") {
  Rng rng(71);
  const TorusGrid grid({9});
  std::vector<SpectralFunction> fs;
  for (int i = 0; i < 3; ++i) fs.push_back(sample_bandlimited_gp({3}, 1.0, 2, rng));
  const BivariateKernel K = input_cov(fs, grid, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Eigen::MatrixXd oracle = pairwise_inner_product(fs[i], fs[j], grid) / 2.0;
      CHECK((K.block(i, j) - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
  CHECK(K.symmetry_defect() < 1e-12);
}

TEST_CASE("fno_integral_cov of a cosine input: hand value and quadrature oracle") {
  const int t = 2, band = 3;
  const TorusGrid grid({9});
  const SpectralFunction f = cosine_function(t, t);
  const BivariateKernel H = input_cov({f}, grid, 1);
  const BivariateKernel out = fno_integral_cov(H, {band}, 1.0);
  const double amp = kTwoPi * kTwoPi;
  for (int p = 0; p < 9; ++p)
    for (int q = 0; q < 9; ++q) {
      const double dz = grid.point(p)[0] - grid.point(q)[0];
      CHECK(out.block(0, 0)(p, q) ==
            doctest::Approx(amp * 0.5 * std::cos(t * dz)).epsilon(1e-10));
    }
  // cross-check a few entries against the defining double integral
  for (int p = 0; p < 3; ++p) {
    const double z1 = grid.point(p)[0], z2 = grid.point(2 * p + 1)[0];
    const double oracle = fno_cov_quadrature(f, f, z1, z2, band, 1.0, 512);
    CHECK(out.block(0, 0)(p, 2 * p + 1) ==
          doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("fno_integral_cov annihilates harmonics above the kernel band") {
  const TorusGrid grid({11});
  const BivariateKernel H = input_cov({cosine_function(4, 4)}, grid, 1);
  const BivariateKernel out = fno_integral_cov(H, {2}, 1.0);
  CHECK(out.values.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fno_integral_cov of constant functions") {
  const TorusGrid grid({7});
  const BivariateKernel H = input_cov({constant_function(1.0)}, grid, 1);
  const BivariateKernel out = fno_integral_cov(H, {0}, 2.0);
  const double expected = 2.0 * kTwoPi * kTwoPi;
  CHECK((out.values.array() - expected).abs().maxCoeff() < 1e-9);
  const double oracle =
      fno_cov_quadrature(constant_function(1.0), constant_function(1.0), 0.3, -1.1, 0, 2.0, 512);
  CHECK(oracle == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("fno_integral_cov rejects sub-Nyquist grids") {
  const TorusGrid grid({5});
  const BivariateKernel H = input_cov({constant_function(1.0)}, grid, 1);
  CHECK_THROWS_AS(fno_integral_cov(H, {3}, 1.0), std::invalid_argument);
}

TEST_CASE("fno_integral_cov is stationary and linear in H") {
  Rng rng(83);
  const TorusGrid grid({9});
  const SpectralFunction f = sample_bandlimited_gp({3}, 1.0, 1, rng);
  const BivariateKernel H = input_cov({f}, grid, 1);
  const BivariateKernel out = fno_integral_cov(H, {3}, 0.7);
  const int m = 9;
  for (int r = 1; r < m; ++r)
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q)
        CHECK(out.block(0, 0)(p, q) ==
              doctest::Approx(out.block(0, 0)((p + r) % m, (q + r) % m)).epsilon(1e-10));

  BivariateKernel scaled = H;
  scaled.values *= 2.0;
  const BivariateKernel out2 = fno_integral_cov(scaled, {3}, 0.7);
  CHECK((out2.values - 2.0 * out.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("matern_spectral_density closed forms") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(matern_spectral_density(0.0, inf, 1.7) == doctest::Approx(1.0));
  CHECK(matern_spectral_density(0.0, 0.5, 1.0) == doctest::Approx(1.0));
  CHECK(matern_spectral_density(4.0, 1.5, 2.0) == doctest::Approx(1.0 / (4.75 * 4.75)));
}

TEST_CASE("matern_kernel_eval limits and symmetry") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(matern_kernel_eval({0.4}, {0.4}, inf, {100.0}, 16) ==
        doctest::Approx(1.0 / kTwoPi).epsilon(1e-12));

  Rng rng(91);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(-kPi, kPi)}, y{rng.uniform(-kPi, kPi)};
    const double a = matern_kernel_eval(x, y, 2.5, {0.8}, 64);
    const double b = matern_kernel_eval(y, x, 2.5, {0.8}, 64);
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
  }
}

TEST_CASE("matern product identity for nu = infinity in 2D") {
  // The tensor-product kernel with equal lengthscales equals the joint kernel
  // built from summed Laplace-Beltrami eigenvalues.
  const double inf = std::numeric_limits<double>::infinity();
  const double ell = 1.3;
  const int N = 32;
  Rng rng(97);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> a{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)};
    const std::vector<double> b{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)};
    const double product = matern_kernel_eval(a, b, inf, {ell, ell}, N);
    double joint = 0.0;
    for (int n1 = -N; n1 <= N; ++n1)
      for (int n2 = -N; n2 <= N; ++n2) {
        const double lambda = static_cast<double>(n1) * n1 + static_cast<double>(n2) * n2;
        joint += std::cos(n1 * (a[0] - b[0]) + n2 * (a[1] - b[1])) *
                 matern_spectral_density(lambda, inf, ell);
      }
    joint /= kTwoPi * kTwoPi;
    CHECK(product == doctest::Approx(joint).epsilon(1e-10));
  }
}

TEST_CASE("matern truncation tail guard rejects rough kernels at low truncation") {
  CHECK_THROWS_AS(matern_kernel_eval({0.0}, {1.0}, 0.5, {1.0}, 16), std::runtime_error);
  CHECK(matern_truncation_tail(2.5, 1.0, 64) < 1e-8);
}

TEST_CASE("matern_integral_cov constant-input reduction") {
  const TorusGrid grid({7});
  ToroidalMaternSpec spec;
  spec.nu_x = 2.5;
  spec.ell_x = {1.0};
  spec.nu_z = std::numeric_limits<double>::infinity();
  spec.ell_z = {0.9};
  spec.truncation = 64;
  spec.sigma_k2 = 1.5;
  const BivariateKernel H = input_cov({constant_function(1.0)}, grid, 1);
  const BivariateKernel out = matern_integral_cov(H, spec);
  const double chat0 = matern_spectral_density(0.0, spec.nu_x, spec.ell_x[0]);
  for (int p = 0; p < 7; ++p)
    for (int q = 0; q < 7; ++q) {
      const double cz = matern_series_1d(grid.point(p)[0] - grid.point(q)[0], spec.nu_z,
                                         spec.ell_z[0], spec.truncation);
      CHECK(out.block(0, 0)(p, q) ==
            doctest::Approx(spec.sigma_k2 * kTwoPi * chat0 * cz).epsilon(1e-10));
    }
}

TEST_CASE("matern_integral_cov single-mode input and quadrature oracle") {
  const TorusGrid grid({7});
  ToroidalMaternSpec spec;
  spec.nu_x = 2.5;
  spec.ell_x = {0.7};
  spec.nu_z = 2.5;
  spec.ell_z = {1.1};
  spec.truncation = 64;
  spec.sigma_k2 = 0.8;
  const int t = 2;
  const SpectralFunction f = cosine_function(t, t);
  const BivariateKernel H = input_cov({f}, grid, 1);
  const BivariateKernel out = matern_integral_cov(H, spec);
  // single surviving mode pair n = +-t, each with weight chat(t^2) / 4 * 2
  const double mass = 0.5 * matern_spectral_density(static_cast<double>(t) * t, spec.nu_x,
                                                    spec.ell_x[0]);
  for (int p = 0; p < 7; ++p)
    for (int q = 0; q < 7; ++q) {
      const double cz = matern_series_1d(grid.point(p)[0] - grid.point(q)[0], spec.nu_z,
                                         spec.ell_z[0], spec.truncation);
      CHECK(out.block(0, 0)(p, q) ==
            doctest::Approx(spec.sigma_k2 * kTwoPi * mass * cz).epsilon(1e-10));
    }
  // defining-integral oracle on a few entries
  for (int p = 0; p < 3; ++p) {
    const double oracle = matern_cov_quadrature(f, f, grid.point(p)[0], grid.point(p + 2)[0],
                                                spec, 256);
    CHECK(out.block(0, 0)(p, p + 2) == doctest::Approx(oracle).epsilon(1e-5));
  }
}

TEST_CASE("matern_integral_cov flat limit approaches a rank-1 constant kernel") {
  const TorusGrid grid({5});
  ToroidalMaternSpec spec;
  spec.nu_x = std::numeric_limits<double>::infinity();
  spec.ell_x = {25.0};
  spec.nu_z = std::numeric_limits<double>::infinity();
  spec.ell_z = {25.0};
  spec.truncation = 32;
  spec.sigma_k2 = 1.0;
  const BivariateKernel H = input_cov({constant_function(1.0)}, grid, 1);
  const BivariateKernel out = matern_integral_cov(H, spec);
  const double first = out.values(0, 0);
  CHECK((out.values.array() - first).abs().maxCoeff() < 1e-8 * std::abs(first));
  const double oracle =
      matern_cov_quadrature(constant_function(1.0), constant_function(1.0), 0.0, 1.0, spec, 256);
  CHECK(first == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("layer_cov_map additive structure") {
  Rng rng(101);
  const TorusGrid grid({9});
  const SpectralFunction f = sample_bandlimited_gp({3}, 1.0, 1, rng);
  const BivariateKernel H = input_cov({f}, grid, 1);

  LayerSpec zero_integral;
  zero_integral.integral = FnoSpec{{3}, 0.0};
  zero_integral.sigma_w2 = 1.0;
  const BivariateKernel ident = layer_cov_map(H, zero_integral);
  CHECK((ident.values - H.values).cwiseAbs().maxCoeff() < 1e-14);

  LayerSpec pure_integral;
  pure_integral.integral = FnoSpec{{3}, 0.9};
  pure_integral.sigma_w2 = 0.0;
  const BivariateKernel a = layer_cov_map(H, pure_integral);
  const BivariateKernel b = fno_integral_cov(H, {3}, 0.9);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("compose_covariance depth-1 equals a single layer map") {
  Rng rng(103);
  const TorusGrid grid({9});
  const std::vector<SpectralFunction> fs{sample_bandlimited_gp({2}, 1.0, 1, rng),
                                         sample_bandlimited_gp({2}, 1.0, 1, rng)};
  NoGpConfig config;
  config.input_channels = 1;
  LayerSpec layer;
  layer.integral = FnoSpec{{2}, 0.5};
  layer.sigma_w2 = 0.3;
  config.layers = {layer};
  const BivariateKernel composed = compose_covariance(config, fs, grid);
  const BivariateKernel direct = layer_cov_map(input_cov(fs, grid, 1), layer);
  CHECK((composed.values - direct.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("compose_covariance matches the unrolled single-hidden-layer closed form") {
  Rng rng(107);
  const TorusGrid grid({9});
  const std::vector<SpectralFunction> fs{sample_bandlimited_gp({3}, 1.0 / 7.0, 1, rng),
                                         sample_bandlimited_gp({3}, 1.0 / 7.0, 1, rng)};
  const double head_var = 0.8;
  const NoGpConfig config = paper_architecture(3, 1.0 / 7.0, 1.0, head_var);
  const BivariateKernel c_inf = compose_covariance(config, fs, grid);

  // symbolic unrolling: c_inf[f,g](x,x') =
  //   head_var * dual_relu(c1[f,f](x,x), c1[f,g](x,x'), c1[g,g](x',x'))
  LayerSpec affine;
  affine.integral = FnoSpec{{3}, 1.0 / 7.0};
  affine.sigma_w2 = 1.0;
  const BivariateKernel c1 = layer_cov_map(input_cov(fs, grid, 1), affine);
  const long nm = c1.size();
  for (long r = 0; r < nm; ++r)
    for (long c = 0; c < nm; ++c) {
      const double expected =
          head_var * relu_dual(c1.values(r, r), c1.values(r, c), c1.values(c, c));
      CHECK(c_inf.values(r, c) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("compose_covariance handles kernel bands above the data-grid Nyquist") {
  Rng rng(109);
  const TorusGrid grid({11});
  const std::vector<SpectralFunction> fs{sample_bandlimited_gp({5}, 1.0, 1, rng),
                                         sample_bandlimited_gp({5}, 1.0, 1, rng)};
  // Band-20 kernel on band-5 inputs must coincide with the band-5 kernel at
  // matched variance: the extra modes see no input mass.
  const BivariateKernel wide =
      compose_covariance(paper_architecture(20, 1.0, 1.0, 1.0), fs, grid);
  const BivariateKernel tight =
      compose_covariance(paper_architecture(5, 1.0, 1.0, 1.0), fs, grid);
  CHECK((wide.values - tight.values).cwiseAbs().maxCoeff() <
        1e-9 * tight.values.cwiseAbs().maxCoeff());
}

TEST_CASE("composition invariants: symmetry, PSD, input scaling") {
  Rng rng(113);
  const TorusGrid grid({9});
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<SpectralFunction> fs;
    const int n = 1 + static_cast<int>(rng.next_u64() % 3);
    for (int i = 0; i < n; ++i) fs.push_back(sample_bandlimited_gp({3}, 1.0 / 7.0, 1, rng));
    const NoGpConfig config = paper_architecture(3, 1.0 / 7.0, 1.0, 1.0);
    const BivariateKernel K = compose_covariance(config, fs, grid);
    CHECK(K.symmetry_defect() < 1e-10);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.values);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * K.values.trace());

    // bilinear input layer + 1-homogeneous maps: scaling inputs by a scales
    // the composed kernel by a^2 for the ReLU architecture
    std::vector<SpectralFunction> scaled = fs;
    for (auto& f : scaled) f.coeffs *= 2.0;
    const BivariateKernel K2 = compose_covariance(config, scaled, grid);
    CHECK((K2.values - 4.0 * K.values).cwiseAbs().maxCoeff() <
          1e-10 * K.values.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("config validation") {
  NoGpConfig config;
  config.input_channels = 1;
  LayerSpec layer;
  layer.activation = ActivationKind::Relu;
  config.layers = {layer};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);  // final activation
  config.layers.clear();
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);  // empty depth
}

TEST_SUITE_END();
