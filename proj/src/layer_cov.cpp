#include "nogp/layer_cov.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "internal.hpp"

namespace nogp {

BivariateKernel::BivariateKernel(int n_functions_, TorusGrid grid_)
    : n_functions(n_functions_), grid(std::move(grid_)) {
  if (n_functions < 1) throw std::invalid_argument("BivariateKernel: need n_functions >= 1");
  values = Eigen::MatrixXd::Zero(size(), size());
}

Eigen::Block<Eigen::MatrixXd> BivariateKernel::block(int i, int j) {
  const long m = points();
  return values.block(i * m, j * m, m, m);
}

Eigen::Block<const Eigen::MatrixXd> BivariateKernel::block(int i, int j) const {
  const long m = points();
  return values.block(i * m, j * m, m, m);
}

double BivariateKernel::symmetry_defect() const {
  return (values - values.transpose()).cwiseAbs().maxCoeff();
}

void NoGpConfig::validate() const {
  if (input_channels < 1) throw std::invalid_argument("NoGpConfig: input_channels must be >= 1");
  if (layers.empty()) throw std::invalid_argument("NoGpConfig: depth must be >= 1");
  if (oversample < 1) throw std::invalid_argument("NoGpConfig: oversample must be >= 1");
  if (layers.back().activation.has_value())
    throw std::invalid_argument("NoGpConfig: final layer must not carry an activation");
  for (const auto& layer : layers) {
    if (layer.sigma_w2 < 0.0) throw std::invalid_argument("NoGpConfig: sigma_w2 must be >= 0");
    if (const auto* fno = std::get_if<FnoSpec>(&layer.integral)) {
      if (fno->sigma_k2 < 0.0) throw std::invalid_argument("NoGpConfig: sigma_k2 must be >= 0");
      if (fno->band.empty()) throw std::invalid_argument("NoGpConfig: FNO band list empty");
      for (int b : fno->band)
        if (b < 0) throw std::invalid_argument("NoGpConfig: FNO band must be >= 0");
    } else if (const auto* mat = std::get_if<ToroidalMaternSpec>(&layer.integral)) {
      if (mat->sigma_k2 < 0.0) throw std::invalid_argument("NoGpConfig: sigma_k2 must be >= 0");
      if (mat->truncation < 1) throw std::invalid_argument("NoGpConfig: truncation must be >= 1");
      auto check_ell = [](const std::vector<double>& ell) {
        if (ell.empty()) throw std::invalid_argument("NoGpConfig: empty lengthscale list");
        for (double l : ell)
          if (!(l > 0.0)) throw std::invalid_argument("NoGpConfig: lengthscales must be > 0");
      };
      check_ell(mat->ell_x);
      check_ell(mat->ell_z);
      auto check_nu = [](double nu) {
        if (!(nu > 0.0)) throw std::invalid_argument("NoGpConfig: nu must be > 0 or infinity");
      };
      check_nu(mat->nu_x);
      check_nu(mat->nu_z);
    }
  }
}

BivariateKernel input_cov(const std::vector<SpectralFunction>& fs, const TorusGrid& grid,
                          int input_channels) {
  if (fs.empty()) throw std::invalid_argument("input_cov: need at least one input");
  std::vector<GridFunction> on_grid;
  on_grid.reserve(fs.size());
  for (const auto& f : fs) {
    if (f.channels != input_channels)
      throw std::invalid_argument("input_cov: input channel count mismatch");
    on_grid.push_back(evaluate_on_grid(f, grid));
  }
  return input_cov(on_grid, input_channels);
}

BivariateKernel input_cov(const std::vector<GridFunction>& fs, int input_channels) {
  if (fs.empty()) throw std::invalid_argument("input_cov: need at least one input");
  for (const auto& f : fs) {
    if (f.channels != input_channels)
      throw std::invalid_argument("input_cov: input channel count mismatch");
    if (!(f.grid == fs.front().grid)) throw std::invalid_argument("input_cov: grid mismatch");
  }
  const int n = static_cast<int>(fs.size());
  BivariateKernel K(n, fs.front().grid);
  const double inv_j = 1.0 / input_channels;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      K.block(i, j) = inv_j * (fs[i].values * fs[j].values.transpose());
      if (j > i) K.block(j, i) = K.block(i, j).transpose();
    }
  }
  return K;
}

namespace {

using detail::analysis_phases;
using detail::pow_two_pi;

// Hhat(s, -s) = (1/M^2) sum_{k,l} H[k,l] exp(-i s.x_k) exp(+i s.x_l), per mode.
Eigen::VectorXcd diagonal_mode_coefficients(const Eigen::Ref<const Eigen::MatrixXd>& block,
                                            const Eigen::MatrixXcd& P) {
  const double inv_m2 = 1.0 / (static_cast<double>(block.rows()) * block.rows());
  const Eigen::MatrixXcd PH = P * block;
  return inv_m2 * PH.cwiseProduct(P.conjugate()).rowwise().sum();
}

void check_imag_residue(const Eigen::MatrixXcd& M, double tol, const char* where) {
  const double residue = M.imag().cwiseAbs().maxCoeff();
  if (residue >= tol)
    throw std::runtime_error(std::string(where) + ": imaginary residue exceeds tolerance");
}

// 1D spectral weights chat(n^2), n = 0..N, validated against the truncation
// tail guard.
std::vector<double> matern_series_weights(double nu, double ell, int truncation) {
  std::vector<double> w(truncation + 1);
  double retained = 0.0;
  for (int n = 0; n <= truncation; ++n) {
    w[n] = matern_spectral_density(static_cast<double>(n) * n, nu, ell);
    retained += (n == 0 ? 1.0 : 2.0) * w[n];
  }
  const double tail = matern_truncation_tail(nu, ell, truncation);
  if (tail > 1e-6 * retained)
    throw std::runtime_error(
        "matern series: omitted tail exceeds 1e-6 of retained spectral mass; "
        "raise the truncation or smoothness");
  return w;
}

// Product-form Matern kernel over all grid-point pairs, built from
// per-dimension difference tables.
Eigen::MatrixXd matern_kernel_matrix(const TorusGrid& grid, double nu,
                                     const std::vector<double>& ell, int truncation) {
  const int d = grid.dim();
  if (static_cast<int>(ell.size()) != d)
    throw std::invalid_argument("matern kernel: lengthscale count != grid dim");
  // table[j][k] = c_1d(2pi k / m_j) for lag k.
  std::vector<std::vector<double>> table(d);
  for (int j = 0; j < d; ++j) {
    const auto w = matern_series_weights(nu, ell[j], truncation);
    table[j].resize(grid.sizes[j]);
    for (int k = 0; k < grid.sizes[j]; ++k) {
      const double delta = kTwoPi * k / grid.sizes[j];
      double acc = w[0];
      for (int n = 1; n <= truncation; ++n) acc += 2.0 * w[n] * std::cos(n * delta);
      table[j][k] = acc / kTwoPi;
    }
  }
  const long m = grid.total();
  // Per-dimension index decomposition of flat grid indices.
  std::vector<std::vector<int>> coord(d, std::vector<int>(m));
  for (long flat = 0; flat < m; ++flat) {
    long rest = flat;
    for (int j = d - 1; j >= 0; --j) {
      coord[j][flat] = static_cast<int>(rest % grid.sizes[j]);
      rest /= grid.sizes[j];
    }
  }
  Eigen::MatrixXd C(m, m);
  for (long p = 0; p < m; ++p) {
    for (long q = 0; q < m; ++q) {
      double v = 1.0;
      for (int j = 0; j < d; ++j) {
        int lag = coord[j][p] - coord[j][q];
        if (lag < 0) lag += grid.sizes[j];
        v *= table[j][lag];
      }
      C(p, q) = v;
    }
  }
  return C;
}

}  // namespace

BivariateKernel fno_integral_cov(const BivariateKernel& H, const std::vector<int>& band,
                                 double sigma_k2) {
  if (sigma_k2 < 0.0) throw std::invalid_argument("fno_integral_cov: sigma_k2 must be >= 0");
  if (!H.grid.supports_band(band))
    throw std::invalid_argument("fno_integral_cov: grid below Nyquist for the kernel band");
  BivariateKernel out(H.n_functions, H.grid);
  if (sigma_k2 == 0.0) return out;

  const Eigen::MatrixXcd P = analysis_phases(H.grid, band);
  const double amp = sigma_k2 * pow_two_pi(2 * H.grid.dim());
  for (int i = 0; i < H.n_functions; ++i) {
    for (int j = i; j < H.n_functions; ++j) {
      const Eigen::VectorXcd hhat = diagonal_mode_coefficients(H.block(i, j), P);
      const Eigen::MatrixXcd rec = P.adjoint() * hhat.asDiagonal() * P;
      check_imag_residue(rec, 1e-8, "fno_integral_cov");
      out.block(i, j) = amp * rec.real();
      if (j > i) {
        out.block(j, i) = out.block(i, j).transpose();
      } else {
        Eigen::MatrixXd sym = 0.5 * (out.block(i, i) + out.block(i, i).transpose());
        out.block(i, i) = sym;
      }
    }
  }
  return out;
}

double matern_spectral_density(double lambda, double nu, double ell) {
  if (lambda < 0.0) throw std::invalid_argument("matern_spectral_density: lambda must be >= 0");
  if (!(ell > 0.0)) throw std::invalid_argument("matern_spectral_density: ell must be > 0");
  if (!(nu > 0.0)) throw std::invalid_argument("matern_spectral_density: nu must be > 0");
  if (std::isinf(nu)) return std::exp(-0.5 * ell * ell * lambda);
  return std::pow(2.0 * nu / (ell * ell) + lambda, -nu - 0.5);
}

double matern_truncation_tail(double nu, double ell, int truncation) {
  const double N = truncation;
  if (std::isinf(nu)) {
    // 2 * int_N^inf exp(-ell^2 t^2 / 2) dt
    return 2.0 * std::sqrt(kPi / 2.0) / ell * 0.5 * std::erfc(ell * N / std::sqrt(2.0));
  }
  // 2 * int_N^inf (2 nu / ell^2 + t^2)^(-(nu+1/2)) dt, via t = N/u on (0, 1].
  const double a = 2.0 * nu / (ell * ell);
  const int steps = 256;
  auto integrand = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double t = N / u;
    return N / (u * u) * std::pow(a + t * t, -(nu + 0.5));
  };
  double acc = 0.0;
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const double u0 = k * h, u1 = (k + 1) * h;
    acc += h / 6.0 * (integrand(u0) + 4.0 * integrand(0.5 * (u0 + u1)) + integrand(u1));
  }
  return 2.0 * acc;
}

double matern_kernel_eval(const std::vector<double>& x, const std::vector<double>& y,
                          double nu, const std::vector<double>& ell, int truncation) {
  if (x.size() != y.size() || x.size() != ell.size())
    throw std::invalid_argument("matern_kernel_eval: dimension mismatch");
  if (truncation < 1) throw std::invalid_argument("matern_kernel_eval: truncation must be >= 1");
  double value = 1.0;
  for (size_t j = 0; j < x.size(); ++j) {
    const auto w = matern_series_weights(nu, ell[j], truncation);
    const double delta = x[j] - y[j];
    double acc = w[0];
    for (int n = 1; n <= truncation; ++n) acc += 2.0 * w[n] * std::cos(n * delta);
    value *= acc / kTwoPi;
  }
  return value;
}

BivariateKernel matern_integral_cov(const BivariateKernel& H, const ToroidalMaternSpec& spec) {
  const int d = H.grid.dim();
  if (static_cast<int>(spec.ell_x.size()) != d || static_cast<int>(spec.ell_z.size()) != d)
    throw std::invalid_argument("matern_integral_cov: lengthscale count != grid dim");
  if (spec.truncation < 1)
    throw std::invalid_argument("matern_integral_cov: truncation must be >= 1");

  // Mode sum capped at the grid Nyquist band.
  std::vector<int> band(d);
  bool reduced = false;
  for (int j = 0; j < d; ++j) {
    const int nyquist = (H.grid.sizes[j] - 1) / 2;
    band[j] = std::min(spec.truncation, nyquist);
    if (band[j] < spec.truncation) reduced = true;
  }
  if (reduced) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      std::cerr << "nogp: matern_integral_cov truncation reduced to the grid Nyquist band\n";
  }

  SpectralFunction layout(band, 1);
  Eigen::VectorXd mode_weights(layout.n_modes());
  for (long idx = 0; idx < layout.n_modes(); ++idx) {
    const auto s = layout.mode(idx);
    double w = 1.0;
    for (int j = 0; j < d; ++j)
      w *= matern_spectral_density(static_cast<double>(s[j]) * s[j], spec.nu_x, spec.ell_x[j]);
    mode_weights(idx) = w;
  }

  const Eigen::MatrixXcd P = analysis_phases(H.grid, band);
  const Eigen::MatrixXd Cz = matern_kernel_matrix(H.grid, spec.nu_z, spec.ell_z, spec.truncation);
  const double amp = spec.sigma_k2 * pow_two_pi(d);

  BivariateKernel out(H.n_functions, H.grid);
  for (int i = 0; i < H.n_functions; ++i) {
    for (int j = i; j < H.n_functions; ++j) {
      const Eigen::VectorXcd hhat = diagonal_mode_coefficients(H.block(i, j), P);
      const Complex mass = hhat.cwiseProduct(mode_weights.cast<Complex>()).sum();
      if (std::abs(mass.imag()) >= 1e-8)
        throw std::runtime_error("matern_integral_cov: imaginary residue exceeds tolerance");
      out.block(i, j) = amp * mass.real() * Cz;
      if (j > i) out.block(j, i) = out.block(i, j).transpose();
    }
  }
  return out;
}

BivariateKernel layer_cov_map(const BivariateKernel& H, const LayerSpec& spec) {
  BivariateKernel out(H.n_functions, H.grid);
  if (const auto* fno = std::get_if<FnoSpec>(&spec.integral)) {
    out = fno_integral_cov(H, fno->band, fno->sigma_k2);
  } else if (const auto* mat = std::get_if<ToroidalMaternSpec>(&spec.integral)) {
    out = matern_integral_cov(H, *mat);
  }
  if (spec.sigma_w2 != 0.0) out.values += spec.sigma_w2 * H.values;
  if (spec.activation) out.values = apply_dual(*spec.activation, out.values);
  return out;
}

namespace {

// Refinement factor so the working grid satisfies Nyquist for every layer
// band and carries the configured oversampling whenever an integral layer
// follows an activation.
int working_refinement(const NoGpConfig& config, const TorusGrid& grid) {
  int factor = 1;
  bool seen_activation = false;
  for (const auto& layer : config.layers) {
    if (const auto* fno = std::get_if<FnoSpec>(&layer.integral)) {
      if (static_cast<int>(fno->band.size()) != grid.dim())
        throw std::invalid_argument("compose_covariance: FNO band dim != grid dim");
      for (int j = 0; j < grid.dim(); ++j) {
        const int need = 2 * fno->band[j] + 1;
        while (factor * grid.sizes[j] < need) ++factor;
      }
    }
    if (layer.has_integral() && seen_activation) factor = std::max(factor, config.oversample);
    if (layer.activation) seen_activation = true;
  }
  return factor;
}

BivariateKernel restrict_kernel(const BivariateKernel& K, const TorusGrid& coarse, int factor) {
  const auto idx = detail::coarse_indices(coarse, factor);
  const long m = coarse.total();
  BivariateKernel out(K.n_functions, coarse);
  for (int i = 0; i < K.n_functions; ++i)
    for (int j = 0; j < K.n_functions; ++j)
      for (long p = 0; p < m; ++p)
        for (long q = 0; q < m; ++q)
          out.block(i, j)(p, q) = K.block(i, j)(idx[p], idx[q]);
  return out;
}

}  // namespace

BivariateKernel compose_covariance(const NoGpConfig& config,
                                   const std::vector<SpectralFunction>& fs,
                                   const TorusGrid& grid) {
  config.validate();
  const int factor = working_refinement(config, grid);
  const TorusGrid working = factor == 1 ? grid : grid.refined(factor);

  int last_integral = -1;
  for (int l = 0; l < config.depth(); ++l)
    if (config.layers[l].has_integral()) last_integral = l;

  BivariateKernel K = input_cov(fs, working, config.input_channels);
  bool restricted = (factor == 1);
  for (int l = 0; l < config.depth(); ++l) {
    const LayerSpec& layer = config.layers[l];
    // Affine part on the current grid.
    BivariateKernel next(K.n_functions, K.grid);
    if (const auto* fno = std::get_if<FnoSpec>(&layer.integral)) {
      next = fno_integral_cov(K, fno->band, fno->sigma_k2);
    } else if (const auto* mat = std::get_if<ToroidalMaternSpec>(&layer.integral)) {
      next = matern_integral_cov(K, *mat);
    }
    if (layer.sigma_w2 != 0.0) next.values += layer.sigma_w2 * K.values;
    K = std::move(next);
    // Once no later layer needs fine-grid Fourier analysis, drop to the data
    // grid; the remaining maps are entry-wise.
    if (!restricted && l >= last_integral) {
      K = restrict_kernel(K, grid, factor);
      restricted = true;
    }
    if (layer.activation) K.values = apply_dual(*layer.activation, K.values);
  }
  if (!restricted) K = restrict_kernel(K, grid, factor);
  return K;
}

}  // namespace nogp
