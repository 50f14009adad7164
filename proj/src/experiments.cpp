#include "nogp/experiments.hpp"

#include <algorithm>
#include <stdexcept>

namespace nogp {

NoGpConfig single_hidden_fno_config(int band, double sigma_k2, double sigma_w2, double head_var) {
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

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return Rng(seed).split(tag).next_u64();
}

double analytic_variance_at_origin(const NoGpConfig& config, const SpectralFunction& f) {
  // Even grids contain x = 0 at flat index m/2 in each dimension; pick the
  // smallest even size supporting all bands involved.
  int need = 2;
  for (int b : f.band) need = std::max(need, 2 * b + 2);
  for (const auto& layer : config.layers)
    if (const auto* fno = std::get_if<FnoSpec>(&layer.integral))
      for (int b : fno->band) need = std::max(need, 2 * b + 2);
  if (need % 2 != 0) ++need;
  std::vector<int> sizes(f.dim(), need);
  const TorusGrid grid(sizes);
  const BivariateKernel K = compose_covariance(config, {f}, grid);
  long origin = 0;
  for (int j = 0; j < grid.dim(); ++j) origin = origin * grid.sizes[j] + grid.sizes[j] / 2;
  return K.values(origin, origin);
}

LimitCheckResult run_limit_check(int band, const std::vector<int>& widths, long n_samples,
                                 std::uint64_t seed, int n_bins) {
  if (widths.empty()) throw std::invalid_argument("run_limit_check: empty width list");
  Rng rng(seed);
  const SpectralFunction f = sample_uniform_bandlimited({band}, rng);
  const double sigma_k2 = 1.0 / (2.0 * band + 1.0);
  const NoGpConfig config = single_hidden_fno_config(band, sigma_k2, 1.0, 1.0);
  const double analytic = analytic_variance_at_origin(config, f);

  LimitCheckResult result;
  result.analytic_variance = analytic;
  for (int width : widths) {
    const std::uint64_t width_seed = derive_seed(seed, 0x4a00 + static_cast<std::uint64_t>(width));
    const Eigen::VectorXd samples =
        mc_output_samples(config, {1, width, 1}, f, {0.0}, n_samples, width_seed);
    LimitCheckRecord record;
    record.width = width;
    record.n_samples = n_samples;
    record.seed = width_seed;
    record.analytic_variance = analytic;
    const double mean = samples.mean();
    record.mc_variance = (samples.array() - mean).square().sum() / samples.size();
    record.tvd = tvd_to_gaussian(samples, 0.0, analytic, n_bins);
    result.records.push_back(record);
  }
  return result;
}

std::vector<VarianceCheckRow> run_variance_check(int band, const std::vector<long>& schedule,
                                                 std::uint64_t seed) {
  if (schedule.empty()) throw std::invalid_argument("run_variance_check: empty schedule");
  Rng rng(seed);
  const SpectralFunction f = sample_uniform_bandlimited({band}, rng);
  const double sigma_k2 = 1.0 / (2.0 * band + 1.0);

  // Single affine layer H = A_k + w, no activation, no head.
  NoGpConfig config;
  config.input_channels = 1;
  LayerSpec layer;
  layer.integral = FnoSpec{{band}, sigma_k2};
  layer.sigma_w2 = 1.0;
  config.layers = {layer};
  const double analytic = analytic_variance_at_origin(config, f);

  const long max_n = *std::max_element(schedule.begin(), schedule.end());
  const Eigen::VectorXd samples =
      mc_output_samples(config, {1, 1}, f, {0.0}, max_n, derive_seed(seed, 0x48));

  std::vector<VarianceCheckRow> rows;
  for (long n : schedule) {
    if (n < 1 || n > max_n) throw std::invalid_argument("run_variance_check: bad schedule entry");
    const auto head = samples.head(n);
    const double mean = head.mean();
    VarianceCheckRow row;
    row.n_samples = n;
    row.mc_variance = (head.array() - mean).square().sum() / static_cast<double>(n);
    row.analytic_variance = analytic;
    row.relative_error = std::abs(row.mc_variance - analytic) / analytic;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nogp
