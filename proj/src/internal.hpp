#pragma once

// Shared internals of the covariance and simulator translation units.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "nogp/torus.hpp"

namespace nogp::detail {

// P(s_idx, k) = exp(-i s.x_k) over the band cube and all grid points.
inline Eigen::MatrixXcd analysis_phases(const TorusGrid& grid, const std::vector<int>& band) {
  SpectralFunction layout(band, 1);
  const long n_modes = layout.n_modes();
  const Eigen::MatrixXd pts = grid.points();
  Eigen::MatrixXcd P(n_modes, grid.total());
  for (long idx = 0; idx < n_modes; ++idx) {
    const auto s = layout.mode(idx);
    for (long k = 0; k < grid.total(); ++k) {
      double arg = 0.0;
      for (int j = 0; j < grid.dim(); ++j) arg -= s[j] * pts(k, j);
      P(idx, k) = Complex(std::cos(arg), std::sin(arg));
    }
  }
  return P;
}

// Flat indices of the coarse-grid points inside the factor-refined grid.
inline std::vector<long> coarse_indices(const TorusGrid& coarse, int factor) {
  const TorusGrid fine = coarse.refined(factor);
  std::vector<long> idx(coarse.total());
  for (long flat = 0; flat < coarse.total(); ++flat) {
    long rest = flat;
    std::vector<int> multi(coarse.dim());
    for (int j = coarse.dim() - 1; j >= 0; --j) {
      multi[j] = static_cast<int>(rest % coarse.sizes[j]);
      rest /= coarse.sizes[j];
    }
    long fine_flat = 0;
    for (int j = 0; j < coarse.dim(); ++j)
      fine_flat = fine_flat * fine.sizes[j] + static_cast<long>(multi[j]) * factor;
    idx[flat] = fine_flat;
  }
  return idx;
}

inline double pow_two_pi(int d) { return std::pow(kTwoPi, d); }

// Static partition of [0, n) across hardware threads; `fn` is called once per
// index. Caller guarantees disjoint writes per index.
inline void parallel_for(long n, const std::function<void(long)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const long n_threads = std::min<long>(hw, n);
  if (n_threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (long t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t]() {
      for (long i = t; i < n; i += n_threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace nogp::detail
