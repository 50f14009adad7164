#include "nogp/fno_sim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "internal.hpp"

namespace nogp {

double FnoParams::conjugate_symmetry_defect() const {
  double worst = 0.0;
  for (const auto& layer : layers) {
    const long n = static_cast<long>(layer.kernel_hat.size());
    for (long idx = 0; idx < n; ++idx) {
      const long neg = n - 1 - idx;
      worst = std::max(
          worst,
          (layer.kernel_hat[idx] - layer.kernel_hat[neg].conjugate()).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

long FnoParams::parameter_count() const {
  long count = 0;
  for (const auto& layer : layers) {
    count += static_cast<long>(layer.kernel_hat.size()) * layer.skip.size();
    count += layer.skip.size();
  }
  return count;
}

FnoParams sample_fno_params(const NoGpConfig& config, const std::vector<int>& widths, Rng& rng) {
  config.validate();
  if (static_cast<int>(widths.size()) != config.depth() + 1)
    throw std::invalid_argument("sample_fno_params: need depth+1 widths");
  if (widths.front() != config.input_channels)
    throw std::invalid_argument("sample_fno_params: widths[0] must equal input_channels");
  for (int j : widths)
    if (j < 1) throw std::invalid_argument("sample_fno_params: widths must be >= 1");

  FnoParams params;
  params.input_channels = config.input_channels;
  params.layers.resize(config.depth());
  for (int l = 0; l < config.depth(); ++l) {
    const LayerSpec& spec = config.layers[l];
    FnoLayerParams& out = params.layers[l];
    const int j_in = widths[l];
    const int j_out = widths[l + 1];
    out.activation = spec.activation;

    if (std::holds_alternative<ToroidalMaternSpec>(spec.integral))
      throw std::invalid_argument(
          "sample_fno_params: finite simulation covers FNO and point-wise layers only");

    if (const auto* fno = std::get_if<FnoSpec>(&spec.integral)) {
      out.band = fno->band;
      SpectralFunction layout(fno->band, 1);
      const long n_modes = layout.n_modes();
      const long zero_idx = n_modes / 2;
      const double var = fno->sigma_k2 / j_in;
      const double full_sd = std::sqrt(var);
      const double half_sd = std::sqrt(var / 2.0);
      out.kernel_hat.assign(n_modes, Eigen::MatrixXcd::Zero(j_out, j_in));
      for (long idx = 0; idx < n_modes; ++idx) {
        const long neg = n_modes - 1 - idx;
        if (idx == zero_idx) {
          for (int a = 0; a < j_out; ++a)
            for (int b = 0; b < j_in; ++b)
              out.kernel_hat[idx](a, b) = Complex(rng.normal(0.0, full_sd), 0.0);
        } else if (idx < neg) {
          for (int a = 0; a < j_out; ++a)
            for (int b = 0; b < j_in; ++b) {
              const Complex z(rng.normal(0.0, half_sd), rng.normal(0.0, half_sd));
              out.kernel_hat[idx](a, b) = z;
              out.kernel_hat[neg](a, b) = std::conj(z);
            }
        }
      }
    }

    out.skip = Eigen::MatrixXd::Zero(j_out, j_in);
    const double skip_sd = std::sqrt(spec.sigma_w2 / j_in);
    for (int a = 0; a < j_out; ++a)
      for (int b = 0; b < j_in; ++b) out.skip(a, b) = rng.normal(0.0, skip_sd);
  }
  return params;
}

namespace {

bool in_band(const std::vector<int>& s, const std::vector<int>& band) {
  for (size_t j = 0; j < s.size(); ++j)
    if (std::abs(s[j]) > band[j]) return false;
  return true;
}

// Spectral affine step: out(s) = (2pi)^d Khat(s) fhat(s) + W fhat(s), on the
// union band of kernel and state.
SpectralFunction spectral_affine(const FnoLayerParams& layer, const SpectralFunction& state) {
  const int d = state.dim();
  std::vector<int> out_band(state.band);
  if (layer.has_integral()) {
    if (static_cast<int>(layer.band.size()) != d)
      throw std::invalid_argument("eval_fno: kernel band dim != input dim");
    for (int j = 0; j < d; ++j) out_band[j] = std::max(out_band[j], layer.band[j]);
  }
  SpectralFunction out(out_band, static_cast<int>(layer.skip.rows()));
  SpectralFunction kernel_layout(layer.has_integral() ? layer.band : out_band, 1);
  const double conv = detail::pow_two_pi(d);
  for (long idx = 0; idx < out.n_modes(); ++idx) {
    const auto s = out.mode(idx);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(out.channels);
    if (in_band(s, state.band)) {
      const Eigen::VectorXcd fhat = state.coeffs.row(state.mode_index(s)).transpose();
      if (layer.has_integral() && in_band(s, layer.band))
        acc += conv * (layer.kernel_hat[kernel_layout.mode_index(s)] * fhat);
      acc += layer.skip.cast<Complex>() * fhat;
    }
    out.coeffs.row(idx) = acc.transpose();
  }
  return out;
}

Eigen::MatrixXd apply_activation(ActivationKind kind, Eigen::MatrixXd v) {
  if (kind == ActivationKind::Relu) v = v.cwiseMax(0.0);
  return v;
}

// Grid affine step on non-band-limited state values over the working grid:
// the integral part reads the kernel-band modes of the discrete transform.
Eigen::MatrixXd grid_affine(const FnoLayerParams& layer, const Eigen::MatrixXd& values,
                            const TorusGrid& working) {
  Eigen::MatrixXd out = values * layer.skip.transpose();
  if (!layer.has_integral()) return out;
  const Eigen::MatrixXcd P = detail::analysis_phases(working, layer.band);
  const double inv_m = 1.0 / static_cast<double>(working.total());
  // fhat (modes x J_in), mode-wise kernel product, synthesis back to values.
  const Eigen::MatrixXcd fhat = inv_m * (P * values.cast<Complex>());
  Eigen::MatrixXcd modes_out(fhat.rows(), layer.skip.rows());
  const double conv = detail::pow_two_pi(working.dim());
  for (long idx = 0; idx < fhat.rows(); ++idx)
    modes_out.row(idx) = conv * (layer.kernel_hat[idx] * fhat.row(idx).transpose()).transpose();
  out += (P.adjoint() * modes_out).real();
  return out;
}

}  // namespace

GridFunction eval_fno(const FnoParams& params, const SpectralFunction& f, const TorusGrid& grid,
                      int oversample) {
  if (f.channels != params.input_channels)
    throw std::invalid_argument("eval_fno: input channel mismatch");
  if (!grid.supports_band(f.band))
    throw std::invalid_argument("eval_fno: grid below Nyquist for the input band");
  bool seen_activation = false;
  bool needs_working_dft = false;
  for (const auto& layer : params.layers) {
    if (layer.has_integral()) {
      if (!grid.supports_band(layer.band))
        throw std::invalid_argument("eval_fno: grid below Nyquist for a kernel band");
      if (seen_activation) needs_working_dft = true;
    }
    if (layer.activation) seen_activation = true;
  }
  const int factor = needs_working_dft ? std::max(1, oversample) : 1;
  const TorusGrid working = factor == 1 ? grid : grid.refined(factor);

  SpectralFunction spec_state = f;
  Eigen::MatrixXd values;
  bool spectral = true;
  for (const auto& layer : params.layers) {
    if (spectral) {
      spec_state = spectral_affine(layer, spec_state);
      if (layer.activation) {
        values = evaluate_on_grid(spec_state, working).values;
        values = apply_activation(*layer.activation, std::move(values));
        spectral = false;
      }
    } else {
      values = grid_affine(layer, values, working);
      if (layer.activation) values = apply_activation(*layer.activation, std::move(values));
    }
  }

  GridFunction out(grid, spectral ? spec_state.channels : static_cast<int>(values.cols()));
  if (spectral) {
    out = evaluate_on_grid(spec_state, grid);
  } else if (factor == 1) {
    out.values = values;
  } else {
    const auto idx = detail::coarse_indices(grid, factor);
    for (long p = 0; p < grid.total(); ++p) out.values.row(p) = values.row(idx[p]);
  }
  return out;
}

Eigen::VectorXd eval_fno_at(const FnoParams& params, const SpectralFunction& f,
                            const std::vector<double>& x) {
  if (f.channels != params.input_channels)
    throw std::invalid_argument("eval_fno_at: input channel mismatch");
  Eigen::MatrixXd point(1, f.dim());
  for (int j = 0; j < f.dim(); ++j) point(0, j) = x[j];

  SpectralFunction spec_state = f;
  Eigen::RowVectorXd values;
  bool spectral = true;
  for (const auto& layer : params.layers) {
    if (spectral) {
      spec_state = spectral_affine(layer, spec_state);
      if (layer.activation) {
        values = evaluate_spectral(spec_state, point).row(0);
        values = apply_activation(*layer.activation, values);
        spectral = false;
      }
    } else {
      if (layer.has_integral())
        throw std::logic_error(
            "eval_fno_at: integral layer after an activation requires the grid path");
      values = values * layer.skip.transpose();
      if (layer.activation) values = apply_activation(*layer.activation, values);
    }
  }
  if (spectral) return evaluate_spectral(spec_state, point).row(0).transpose();
  return values.transpose();
}

Eigen::VectorXd mc_output_samples(const NoGpConfig& config, const std::vector<int>& widths,
                                  const SpectralFunction& f, const std::vector<double>& x,
                                  long n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("mc_output_samples: n_samples must be >= 1");
  Eigen::VectorXd out(n_samples);
  const Rng master(seed);
  detail::parallel_for(n_samples, [&](long r) {
    Rng rng = master.split(static_cast<std::uint64_t>(r));
    const FnoParams params = sample_fno_params(config, widths, rng);
    out(r) = eval_fno_at(params, f, x)(0);
  });
  return out;
}

Eigen::MatrixXd mc_grid_outputs(const NoGpConfig& config, const std::vector<int>& widths,
                                const std::vector<SpectralFunction>& fs, const TorusGrid& grid,
                                long n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("mc_grid_outputs: n_samples must be >= 1");
  if (fs.empty()) throw std::invalid_argument("mc_grid_outputs: need at least one input");
  const long m = grid.total();
  Eigen::MatrixXd out(n_samples, static_cast<long>(fs.size()) * m);
  const Rng master(seed);
  detail::parallel_for(n_samples, [&](long r) {
    Rng rng = master.split(static_cast<std::uint64_t>(r));
    const FnoParams params = sample_fno_params(config, widths, rng);
    for (size_t i = 0; i < fs.size(); ++i) {
      const GridFunction g = eval_fno(params, fs[i], grid, config.oversample);
      out.row(r).segment(static_cast<long>(i) * m, m) = g.values.col(0).transpose();
    }
  });
  return out;
}

double tvd_to_gaussian(const Eigen::VectorXd& samples, double mu, double var, int n_bins) {
  if (samples.size() == 0) throw std::invalid_argument("tvd_to_gaussian: empty sample list");
  if (!(var > 0.0)) throw std::invalid_argument("tvd_to_gaussian: variance must be > 0");
  if (n_bins < 2) throw std::invalid_argument("tvd_to_gaussian: need at least 2 bins");

  const double sd = std::sqrt(var);
  const double lo = mu - 6.0 * sd;
  const double width = 12.0 * sd / n_bins;
  auto gauss_cdf = [&](double t) { return 0.5 * std::erfc(-(t - mu) / (sd * std::sqrt(2.0))); };

  // n_bins interior bins plus the two tails.
  std::vector<double> counts(n_bins + 2, 0.0);
  for (long i = 0; i < samples.size(); ++i) {
    const double v = samples(i);
    int bin;
    if (v < lo)
      bin = 0;
    else {
      const int k = static_cast<int>((v - lo) / width);
      bin = (k >= n_bins) ? n_bins + 1 : k + 1;
    }
    counts[bin] += 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double tvd = 0.0;
  for (int b = 0; b < n_bins + 2; ++b) {
    const double left = (b == 0) ? -std::numeric_limits<double>::infinity() : lo + (b - 1) * width;
    const double right = (b == n_bins + 1) ? std::numeric_limits<double>::infinity() : lo + b * width;
    const double gauss_mass = gauss_cdf(right) - gauss_cdf(left);
    tvd += std::abs(counts[b] * inv_n - gauss_mass);
  }
  return 0.5 * tvd;
}

}  // namespace nogp
