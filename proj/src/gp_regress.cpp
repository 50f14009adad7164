#include "nogp/gp_regress.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace nogp {

void FunctionDataset::validate() const {
  if (inputs.empty()) throw std::invalid_argument("FunctionDataset: need n >= 1");
  if (inputs.size() != targets.size())
    throw std::invalid_argument("FunctionDataset: input/target count mismatch");
  for (const auto& f : inputs) {
    f.validate();
    if (!(f.grid == grid)) throw std::invalid_argument("FunctionDataset: input grid mismatch");
    if (f.channels != inputs[0].channels)
      throw std::invalid_argument("FunctionDataset: input channel mismatch");
  }
  for (const auto& g : targets) {
    g.validate();
    if (!(g.grid == grid)) throw std::invalid_argument("FunctionDataset: target grid mismatch");
    if (g.channels != 1) throw std::invalid_argument("FunctionDataset: targets must be scalar");
  }
}

FunctionDataset FunctionDataset::select(const std::vector<int>& indices) const {
  FunctionDataset out;
  out.grid = grid;
  out.domain_map = domain_map;
  out.data_seed = data_seed;
  out.truth_seed = truth_seed;
  out.has_seeds = has_seeds;
  for (int i : indices) {
    out.inputs.push_back(inputs.at(i));
    out.targets.push_back(targets.at(i));
    if (i < static_cast<int>(names.size())) out.names.push_back(names[i]);
  }
  return out;
}

std::vector<SpectralFunction> dataset_spectra(const FunctionDataset& ds) {
  std::vector<int> band(ds.grid.dim());
  for (int j = 0; j < ds.grid.dim(); ++j) band[j] = (ds.grid.sizes[j] - 1) / 2;
  std::vector<SpectralFunction> fs;
  fs.reserve(ds.inputs.size());
  for (const auto& f : ds.inputs) fs.push_back(fourier_coeffs(f, band));
  return fs;
}

namespace {

Eigen::VectorXd stacked_targets(const FunctionDataset& ds) {
  const long m = ds.grid.total();
  Eigen::VectorXd y(static_cast<long>(ds.n()) * m);
  for (int i = 0; i < ds.n(); ++i) y.segment(static_cast<long>(i) * m, m) = ds.targets[i].values.col(0);
  return y;
}

// Cholesky with jitter escalation relative to the mean diagonal.
Eigen::LLT<Eigen::MatrixXd> chol_escalate(const Eigen::MatrixXd& M) {
  const double mean_diag = M.diagonal().mean();
  const double scale = (mean_diag > 0.0) ? mean_diag : 1.0;
  for (double jitter : {0.0, 1e-6, 1e-4}) {
    Eigen::MatrixXd A = M;
    if (jitter > 0.0) A.diagonal().array() += jitter * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw std::runtime_error("gp_regress: Cholesky failed after jitter escalation to 1e-4");
}

Eigen::MatrixXd gram_from_kernel(const BivariateKernel& K) {
  Eigen::MatrixXd M = K.values;
  for (long r = 0; r < M.rows(); ++r)
    for (long c = 0; c < M.cols(); ++c)
      if (!std::isfinite(M(r, c)))
        throw std::runtime_error("gp_regress: non-finite kernel entry at (" + std::to_string(r) +
                                 ", " + std::to_string(c) + ")");
  M = 0.5 * (M + M.transpose());
  M.diagonal().array() += 1e-8 * M.diagonal().mean();
  return M;
}

}  // namespace

Eigen::MatrixXd build_gram(const GpHyperparams& hp, const FunctionDataset& ds) {
  ds.validate();
  return gram_from_kernel(compose_covariance(hp.config, dataset_spectra(ds), ds.grid));
}

double log_marginal_likelihood(const GpHyperparams& hp, const FunctionDataset& ds) {
  if (!(hp.noise_variance > 0.0))
    throw std::invalid_argument("log_marginal_likelihood: noise variance must be > 0");
  Eigen::MatrixXd M = build_gram(hp, ds);
  M.diagonal().array() += hp.noise_variance;
  const Eigen::LLT<Eigen::MatrixXd> llt = chol_escalate(M);
  const Eigen::VectorXd y = stacked_targets(ds);
  const Eigen::VectorXd alpha = llt.solve(y);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * y.dot(alpha) - 0.5 * log_det -
         0.5 * static_cast<double>(y.size()) * std::log(kTwoPi);
}

namespace {

// Positive hyperparameters exposed to the optimizer, in log space.
struct ParamPack {
  std::vector<double*> slots;

  static ParamPack collect(GpHyperparams& hp) {
    ParamPack pack;
    for (auto& layer : hp.config.layers) {
      if (auto* fno = std::get_if<FnoSpec>(&layer.integral)) {
        if (fno->sigma_k2 > 0.0) pack.slots.push_back(&fno->sigma_k2);
      } else if (auto* mat = std::get_if<ToroidalMaternSpec>(&layer.integral)) {
        if (mat->sigma_k2 > 0.0) pack.slots.push_back(&mat->sigma_k2);
        for (auto& l : mat->ell_x) pack.slots.push_back(&l);
        for (auto& l : mat->ell_z) pack.slots.push_back(&l);
      }
      if (layer.sigma_w2 > 0.0) pack.slots.push_back(&layer.sigma_w2);
    }
    pack.slots.push_back(&hp.noise_variance);
    return pack;
  }

  [[nodiscard]] Eigen::VectorXd read() const {
    Eigen::VectorXd theta(slots.size());
    for (size_t i = 0; i < slots.size(); ++i) theta(i) = std::log(*slots[i]);
    return theta;
  }

  void write(const Eigen::VectorXd& theta) const {
    for (size_t i = 0; i < slots.size(); ++i) *slots[i] = std::exp(theta(i));
  }
};

constexpr double kNoiseFloor = 1e-8;

}  // namespace

FitResult fit_hyperparams(const FunctionDataset& ds, const GpHyperparams& init, int budget) {
  if (budget < 1) throw std::invalid_argument("fit_hyperparams: budget must be >= 1");
  GpHyperparams work = init;
  work.noise_variance = std::max(work.noise_variance, kNoiseFloor);
  const ParamPack pack = ParamPack::collect(work);
  const int dim = static_cast<int>(pack.slots.size());

  int evals = 0;
  auto objective = [&](const Eigen::VectorXd& theta) -> double {
    ++evals;
    pack.write(theta);
    GpHyperparams probe = work;
    probe.noise_variance = std::max(probe.noise_variance, kNoiseFloor);
    try {
      return log_marginal_likelihood(probe, ds);
    } catch (const std::runtime_error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  Eigen::VectorXd theta = pack.read();
  double fval = objective(theta);
  Eigen::VectorXd best_theta = theta;
  double best_f = fval;

  const double fd_step = 1e-5;
  auto gradient = [&](const Eigen::VectorXd& at) -> Eigen::VectorXd {
    Eigen::VectorXd g(dim);
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd lo = at, hi = at;
      lo(i) -= fd_step;
      hi(i) += fd_step;
      g(i) = (objective(hi) - objective(lo)) / (2.0 * fd_step);
    }
    return g;
  };

  // L-BFGS two-loop recursion on the negated objective.
  const int history = 6;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  Eigen::VectorXd grad;
  bool have_grad = false;
  bool converged = false;

  while (evals + 2 * dim < budget) {
    if (!have_grad) {
      grad = gradient(theta);
      have_grad = true;
    }
    if (!grad.allFinite()) break;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-5) {
      converged = true;
      break;
    }
    // descent direction for -f
    Eigen::VectorXd q = -grad;
    std::vector<double> alpha_hist(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      alpha_hist[k] = rho * s_hist[k].dot(q);
      q -= alpha_hist[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (size_t k = 0; k < s_hist.size(); ++k) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      const double beta = rho * y_hist[k].dot(q);
      q += (alpha_hist[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd direction = -q;  // ascent direction for f
    if (direction.dot(grad) <= 0.0) direction = grad;  // fall back to steepest ascent

    // Armijo backtracking on f (maximization)
    const double slope = direction.dot(grad);
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd theta_new;
    double f_new = 0.0;
    for (int ls = 0; ls < 12 && evals < budget; ++ls) {
      theta_new = theta + step * direction;
      f_new = objective(theta_new);
      if (f_new >= fval + 1e-4 * step * slope && std::isfinite(f_new)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    if (evals + 2 * dim > budget) {  // no room for the next gradient
      theta = theta_new;
      fval = f_new;
      if (fval > best_f) {
        best_f = fval;
        best_theta = theta;
      }
      break;
    }
    const Eigen::VectorXd grad_new = gradient(theta_new);
    const Eigen::VectorXd s = theta_new - theta;
    const Eigen::VectorXd yv = -(grad_new - grad);  // curvature pair of -f
    if (yv.dot(s) > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      if (static_cast<int>(s_hist.size()) > history) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    theta = theta_new;
    fval = f_new;
    grad = grad_new;
    if (fval > best_f) {
      best_f = fval;
      best_theta = theta;
    }
  }

  pack.write(best_theta);
  FitResult result;
  result.hp = work;
  result.hp.noise_variance = std::max(result.hp.noise_variance, kNoiseFloor);
  result.objective = best_f;
  result.converged = converged;
  result.n_evals = evals;
  return result;
}

namespace {

// Joint kernel over train + test inputs, sliced into the pieces GP
// conditioning needs.
struct JointSlices {
  Eigen::MatrixXd gram;      // train x train (jittered)
  Eigen::MatrixXd cross;     // train x test
  Eigen::MatrixXd test_cov;  // test x test
};

JointSlices joint_kernel(const GpHyperparams& hp, const FunctionDataset& ds,
                         const std::vector<GridFunction>& stars) {
  std::vector<SpectralFunction> fs = dataset_spectra(ds);
  std::vector<int> band(ds.grid.dim());
  for (int j = 0; j < ds.grid.dim(); ++j) band[j] = (ds.grid.sizes[j] - 1) / 2;
  for (const auto& star : stars) {
    if (!(star.grid == ds.grid))
      throw std::invalid_argument("posterior_predict: test input grid mismatch");
    fs.push_back(fourier_coeffs(star, band));
  }
  const BivariateKernel K = compose_covariance(hp.config, fs, ds.grid);
  const long m = ds.grid.total();
  const long nt = static_cast<long>(ds.n()) * m;
  const long ns = static_cast<long>(stars.size()) * m;
  JointSlices out;
  out.gram = K.values.topLeftCorner(nt, nt);
  for (long r = 0; r < nt; ++r)
    for (long c = 0; c < nt; ++c)
      if (!std::isfinite(out.gram(r, c)))
        throw std::runtime_error("gp_regress: non-finite kernel entry at (" + std::to_string(r) +
                                 ", " + std::to_string(c) + ")");
  out.gram = 0.5 * (out.gram + out.gram.transpose()).eval();
  out.gram.diagonal().array() += 1e-8 * out.gram.diagonal().mean();
  out.cross = K.values.topRightCorner(nt, ns);
  out.test_cov = K.values.bottomRightCorner(ns, ns);
  return out;
}

}  // namespace

Posterior posterior_predict(const GpHyperparams& hp, const FunctionDataset& ds,
                            const GridFunction& f_star) {
  ds.validate();
  JointSlices slices = joint_kernel(hp, ds, {f_star});
  slices.gram.diagonal().array() += hp.noise_variance;
  const Eigen::LLT<Eigen::MatrixXd> llt = chol_escalate(slices.gram);
  const Eigen::VectorXd y = stacked_targets(ds);

  Posterior post;
  post.mean = GridFunction(ds.grid, 1);
  post.mean.values.col(0) = slices.cross.transpose() * llt.solve(y);
  const Eigen::MatrixXd v = llt.solve(slices.cross);
  post.cov = slices.test_cov - slices.cross.transpose() * v;
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  return post;
}

std::vector<GridFunction> posterior_mean_batch(const GpHyperparams& hp,
                                               const FunctionDataset& ds,
                                               const std::vector<GridFunction>& stars) {
  ds.validate();
  JointSlices slices = joint_kernel(hp, ds, stars);
  slices.gram.diagonal().array() += hp.noise_variance;
  const Eigen::LLT<Eigen::MatrixXd> llt = chol_escalate(slices.gram);
  const Eigen::VectorXd mean_flat = slices.cross.transpose() * llt.solve(stacked_targets(ds));
  const long m = ds.grid.total();
  std::vector<GridFunction> out;
  out.reserve(stars.size());
  for (size_t i = 0; i < stars.size(); ++i) {
    GridFunction g(ds.grid, 1);
    g.values.col(0) = mean_flat.segment(static_cast<long>(i) * m, m);
    out.push_back(std::move(g));
  }
  return out;
}

std::pair<double, double> l2_error(const GridFunction& pred, const GridFunction& truth) {
  if (!(pred.grid == truth.grid)) throw std::invalid_argument("l2_error: grid mismatch");
  const double cell = pred.grid.cell_volume();
  const double abs_err = std::sqrt(cell * (pred.values - truth.values).squaredNorm());
  const double truth_norm = std::sqrt(cell * truth.values.squaredNorm());
  double rel;
  if (abs_err == 0.0)
    rel = 0.0;
  else
    rel = abs_err / (truth_norm > 0.0 ? truth_norm : abs_err);
  return {abs_err, rel};
}

CvResult cross_validate(const FunctionDataset& ds, const GpHyperparams& init, int k_folds,
                        int budget, std::uint64_t seed) {
  ds.validate();
  if (k_folds < 2 || k_folds > ds.n())
    throw std::invalid_argument("cross_validate: need 2 <= k_folds <= n");

  // Deterministic shuffled fold assignment.
  std::vector<int> order(ds.n());
  for (int i = 0; i < ds.n(); ++i) order[i] = i;
  Rng rng(seed);
  for (int i = ds.n() - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }

  CvResult result;
  const int base = ds.n() / k_folds;
  const int extra = ds.n() % k_folds;
  int cursor = 0;
  for (int fold = 0; fold < k_folds; ++fold) {
    const int size = base + (fold < extra ? 1 : 0);
    std::vector<int> test_idx(order.begin() + cursor, order.begin() + cursor + size);
    cursor += size;
    std::vector<int> train_idx;
    for (int i : order)
      if (std::find(test_idx.begin(), test_idx.end(), i) == test_idx.end())
        train_idx.push_back(i);

    const auto start = std::chrono::steady_clock::now();
    const FunctionDataset train = ds.select(train_idx);
    const FitResult fit = fit_hyperparams(train, init, budget);

    std::vector<GridFunction> stars;
    for (int i : test_idx) stars.push_back(ds.inputs[i]);
    const std::vector<GridFunction> means = posterior_mean_batch(fit.hp, train, stars);

    CvFold record;
    record.test_indices = test_idx;
    record.fitted = fit.hp;
    record.fit_objective = fit.objective;
    for (size_t t = 0; t < stars.size(); ++t) {
      const auto [abs_err, rel_err] = l2_error(means[t], ds.targets[test_idx[t]]);
      record.mean_abs += abs_err;
      record.mean_rel += rel_err;
    }
    record.mean_abs /= static_cast<double>(stars.size());
    record.mean_rel /= static_cast<double>(stars.size());
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.folds.push_back(std::move(record));
  }

  auto aggregate = [&](auto getter, double& mean, double& stddev) {
    mean = 0.0;
    for (const auto& f : result.folds) mean += getter(f);
    mean /= static_cast<double>(result.folds.size());
    stddev = 0.0;
    if (result.folds.size() > 1) {
      for (const auto& f : result.folds) stddev += (getter(f) - mean) * (getter(f) - mean);
      stddev = std::sqrt(stddev / static_cast<double>(result.folds.size() - 1));
    }
  };
  aggregate([](const CvFold& f) { return f.mean_abs; }, result.mean_abs, result.std_abs);
  aggregate([](const CvFold& f) { return f.mean_rel; }, result.mean_rel, result.std_rel);
  return result;
}

}  // namespace nogp
