#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "nogp/rng.hpp"

namespace nogp {

// Fourier-series arithmetic for band-limited real functions on the flat torus
// [-pi, pi)^d. Conventions used throughout the library:
//
//   psi_s(x)  = exp(-i s.x)
//   FS_s[f]   = (2pi)^-d  integral f(t) psi_s(t) dt      (Lebesgue measure)
//   f(x)      = sum_s FS_s[f] psi_{-s}(x) = sum_s FS_s[f] exp(+i s.x)
//
// Real-valued f implies conjugate symmetry FS_{-s} = conj(FS_s).

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Equispaced periodic grid, x_k = -pi + 2pi k / m_j per dimension.
struct TorusGrid {
  std::vector<int> sizes;

  TorusGrid() = default;
  explicit TorusGrid(std::vector<int> sizes_);

  [[nodiscard]] int dim() const { return static_cast<int>(sizes.size()); }
  [[nodiscard]] long total() const;
  [[nodiscard]] double spacing(int j) const { return kTwoPi / sizes[j]; }
  // Volume of one grid cell, prod_j 2pi/m_j; the trapezoid quadrature weight.
  [[nodiscard]] double cell_volume() const;

  // Coordinates of the flat (row-major) grid index.
  [[nodiscard]] std::vector<double> point(long flat) const;
  // All grid points as a (total x dim) matrix.
  [[nodiscard]] Eigen::MatrixXd points() const;

  // True if m_j >= 2 B_j + 1 in every dimension (exact representation of
  // band-limit-B functions).
  [[nodiscard]] bool supports_band(const std::vector<int>& band) const;

  // Grid with every dimension refined by an integer factor; contains the
  // original points as the stride-`factor` sublattice.
  [[nodiscard]] TorusGrid refined(int factor) const;

  bool operator==(const TorusGrid& other) const { return sizes == other.sizes; }
};

// Real values of a (possibly multi-channel) function on a TorusGrid.
// values(k, p) = f_p(x_k), k the flat row-major grid index.
struct GridFunction {
  TorusGrid grid;
  int channels = 1;
  Eigen::MatrixXd values;  // total() x channels

  GridFunction() = default;
  GridFunction(TorusGrid grid_, int channels_);

  void validate() const;  // throws std::invalid_argument on inconsistency
};

// Complex Fourier coefficients of a band-limited real function.
// Mode multi-indices s live in the cube {-B_1..B_1} x ... x {-B_d..B_d},
// flattened row-major with s_j + B_j as the per-dimension offset.
struct SpectralFunction {
  std::vector<int> band;
  int channels = 1;
  Eigen::MatrixXcd coeffs;  // n_modes() x channels

  SpectralFunction() = default;
  SpectralFunction(std::vector<int> band_, int channels_);

  [[nodiscard]] int dim() const { return static_cast<int>(band.size()); }
  [[nodiscard]] long n_modes() const;
  [[nodiscard]] std::vector<int> mode(long flat) const;  // flat -> s
  [[nodiscard]] long mode_index(const std::vector<int>& s) const;  // s -> flat

  // Maximum |coeffs[s] - conj(coeffs[-s])| over all modes and channels.
  [[nodiscard]] double conjugate_symmetry_defect() const;
  // Map coeffs[s] <- (coeffs[s] + conj(coeffs[-s])) / 2 exactly.
  void enforce_conjugate_symmetry();
};

// Discrete Fourier analysis on the grid:
//   FS_s[f_p] = (1 / prod_j m_j) sum_k f_p(x_k) exp(-i s.x_k),
// exact for band-limited f whenever m_j >= 2 B_j + 1.
// Throws std::invalid_argument if the grid is too coarse for the band.
SpectralFunction fourier_coeffs(const GridFunction& f, const std::vector<int>& band);

// Series synthesis sum_s FS_s[f] exp(+i s.x) at arbitrary points
// (rows of `points`, dim columns). The imaginary residue is checked to be
// below 1e-10 in magnitude and discarded.
Eigen::MatrixXd evaluate_spectral(const SpectralFunction& f, const Eigen::MatrixXd& points);

// Synthesis on a full grid; exact inverse of fourier_coeffs on Nyquist grids.
GridFunction evaluate_on_grid(const SpectralFunction& f, const TorusGrid& grid);

// Draw of a centered Gaussian band-limited function: FS_0 real N(0, var),
// Re/Im FS_s i.i.d. N(0, var/2) for s != 0, conjugate pairs tied. The induced
// covariance is c(x, x') = var * sum_{|s|<=B} exp(i s.(x - x')).
SpectralFunction sample_bandlimited_gp(const std::vector<int>& band, double variance,
                                       int channels, Rng& rng);

// Band-limited interpolant through i.i.d. uniform(-1, 1) values at the
// canonical (2B+1)^d grid points; the standard random test input.
SpectralFunction sample_uniform_bandlimited(const std::vector<int>& band, Rng& rng);

// H[p, q] = g(x_q)^T f(x_p) over all grid-point pairs.
// Throws std::invalid_argument on channel mismatch.
Eigen::MatrixXd pairwise_inner_product(const SpectralFunction& f, const SpectralFunction& g,
                                       const TorusGrid& grid);
Eigen::MatrixXd pairwise_inner_product(const GridFunction& f, const GridFunction& g);

}  // namespace nogp
