#include "nogp/torus.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nogp {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.empty()) throw std::invalid_argument("TorusGrid: empty size list");
  for (int m : sizes) {
    if (m < 1) throw std::invalid_argument("TorusGrid: every size must be >= 1");
  }
}

}  // namespace

TorusGrid::TorusGrid(std::vector<int> sizes_) : sizes(std::move(sizes_)) { check_sizes(sizes); }

long TorusGrid::total() const {
  long n = 1;
  for (int m : sizes) n *= m;
  return n;
}

double TorusGrid::cell_volume() const {
  double v = 1.0;
  for (int m : sizes) v *= kTwoPi / m;
  return v;
}

std::vector<double> TorusGrid::point(long flat) const {
  std::vector<double> x(sizes.size());
  for (int j = dim() - 1; j >= 0; --j) {
    const long k = flat % sizes[j];
    flat /= sizes[j];
    x[j] = -kPi + kTwoPi * static_cast<double>(k) / sizes[j];
  }
  return x;
}

Eigen::MatrixXd TorusGrid::points() const {
  Eigen::MatrixXd pts(total(), dim());
  for (long k = 0; k < total(); ++k) {
    const auto x = point(k);
    for (int j = 0; j < dim(); ++j) pts(k, j) = x[j];
  }
  return pts;
}

bool TorusGrid::supports_band(const std::vector<int>& band) const {
  if (static_cast<int>(band.size()) != dim()) return false;
  for (int j = 0; j < dim(); ++j) {
    if (band[j] < 0) return false;
    if (sizes[j] < 2 * band[j] + 1) return false;
  }
  return true;
}

TorusGrid TorusGrid::refined(int factor) const {
  if (factor < 1) throw std::invalid_argument("TorusGrid::refined: factor must be >= 1");
  std::vector<int> fine(sizes);
  for (int& m : fine) m *= factor;
  return TorusGrid(fine);
}

GridFunction::GridFunction(TorusGrid grid_, int channels_)
    : grid(std::move(grid_)), channels(channels_) {
  if (channels < 1) throw std::invalid_argument("GridFunction: channels must be >= 1");
  values = Eigen::MatrixXd::Zero(grid.total(), channels);
}

void GridFunction::validate() const {
  if (channels < 1) throw std::invalid_argument("GridFunction: channels must be >= 1");
  if (values.rows() != grid.total() || values.cols() != channels)
    throw std::invalid_argument("GridFunction: value shape inconsistent with grid/channels");
  if (!values.allFinite()) throw std::invalid_argument("GridFunction: non-finite values");
}

SpectralFunction::SpectralFunction(std::vector<int> band_, int channels_)
    : band(std::move(band_)), channels(channels_) {
  if (band.empty()) throw std::invalid_argument("SpectralFunction: empty band list");
  for (int b : band) {
    if (b < 0) throw std::invalid_argument("SpectralFunction: band limits must be >= 0");
  }
  if (channels < 1) throw std::invalid_argument("SpectralFunction: channels must be >= 1");
  coeffs = Eigen::MatrixXcd::Zero(n_modes(), channels);
}

long SpectralFunction::n_modes() const {
  long n = 1;
  for (int b : band) n *= 2 * b + 1;
  return n;
}

std::vector<int> SpectralFunction::mode(long flat) const {
  std::vector<int> s(band.size());
  for (int j = dim() - 1; j >= 0; --j) {
    const int width = 2 * band[j] + 1;
    s[j] = static_cast<int>(flat % width) - band[j];
    flat /= width;
  }
  return s;
}

long SpectralFunction::mode_index(const std::vector<int>& s) const {
  long flat = 0;
  for (int j = 0; j < dim(); ++j) {
    flat = flat * (2 * band[j] + 1) + (s[j] + band[j]);
  }
  return flat;
}

double SpectralFunction::conjugate_symmetry_defect() const {
  double worst = 0.0;
  const long n = n_modes();
  for (long idx = 0; idx < n; ++idx) {
    // -s has the mirrored flat index n - 1 - idx in the symmetric cube.
    const long neg = n - 1 - idx;
    for (int p = 0; p < channels; ++p) {
      worst = std::max(worst, std::abs(coeffs(idx, p) - std::conj(coeffs(neg, p))));
    }
  }
  return worst;
}

void SpectralFunction::enforce_conjugate_symmetry() {
  const long n = n_modes();
  for (long idx = 0; idx < n; ++idx) {
    const long neg = n - 1 - idx;
    if (idx > neg) break;
    for (int p = 0; p < channels; ++p) {
      const Complex symm = 0.5 * (coeffs(idx, p) + std::conj(coeffs(neg, p)));
      coeffs(idx, p) = symm;
      coeffs(neg, p) = std::conj(symm);
    }
  }
}

namespace {

// exp(-i s.x_k) for all grid points k at a fixed mode s, built per dimension
// from the grid spacing so the twiddle factors stay O(total) to assemble.
Eigen::VectorXcd mode_phases(const TorusGrid& grid, const std::vector<int>& s) {
  const int d = grid.dim();
  Eigen::VectorXcd phases = Eigen::VectorXcd::Constant(1, Complex(1.0, 0.0));
  for (int j = 0; j < d; ++j) {
    const int m = grid.sizes[j];
    Eigen::VectorXcd dim_phase(m);
    for (int k = 0; k < m; ++k) {
      const double x = -kPi + kTwoPi * k / m;
      const double arg = -static_cast<double>(s[j]) * x;
      dim_phase(k) = Complex(std::cos(arg), std::sin(arg));
    }
    Eigen::VectorXcd next(phases.size() * m);
    for (long a = 0; a < phases.size(); ++a)
      for (int k = 0; k < m; ++k) next(a * m + k) = phases(a) * dim_phase(k);
    phases = std::move(next);
  }
  return phases;
}

}  // namespace

SpectralFunction fourier_coeffs(const GridFunction& f, const std::vector<int>& band) {
  f.validate();
  if (!f.grid.supports_band(band)) {
    throw std::invalid_argument(
        "fourier_coeffs: grid too coarse for requested band (need m_j >= 2B_j+1)");
  }
  SpectralFunction out(band, f.channels);
  const double inv_n = 1.0 / static_cast<double>(f.grid.total());
  const Eigen::MatrixXcd vals = f.values.cast<Complex>();
  for (long idx = 0; idx < out.n_modes(); ++idx) {
    const Eigen::VectorXcd phases = mode_phases(f.grid, out.mode(idx));
    out.coeffs.row(idx) = inv_n * (phases.transpose() * vals);
  }
  out.enforce_conjugate_symmetry();
  return out;
}

Eigen::MatrixXd evaluate_spectral(const SpectralFunction& f, const Eigen::MatrixXd& points) {
  if (points.cols() != f.dim())
    throw std::invalid_argument("evaluate_spectral: point dimension mismatch");
  const long n_pts = points.rows();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n_pts, f.channels);
  for (long idx = 0; idx < f.n_modes(); ++idx) {
    const auto s = f.mode(idx);
    Eigen::VectorXcd phase(n_pts);
    for (long k = 0; k < n_pts; ++k) {
      double arg = 0.0;
      for (int j = 0; j < f.dim(); ++j) arg += s[j] * points(k, j);
      phase(k) = Complex(std::cos(arg), std::sin(arg));  // exp(+i s.x)
    }
    acc.noalias() += phase * f.coeffs.row(idx);
  }
  const double residue = acc.imag().cwiseAbs().maxCoeff();
  if (residue >= 1e-10) {
    throw std::runtime_error("evaluate_spectral: imaginary residue " + std::to_string(residue) +
                             " exceeds 1e-10; coefficients are not conjugate-symmetric");
  }
  return acc.real();
}

GridFunction evaluate_on_grid(const SpectralFunction& f, const TorusGrid& grid) {
  GridFunction out(grid, f.channels);
  out.values = evaluate_spectral(f, grid.points());
  return out;
}

SpectralFunction sample_bandlimited_gp(const std::vector<int>& band, double variance,
                                       int channels, Rng& rng) {
  if (variance <= 0.0) throw std::invalid_argument("sample_bandlimited_gp: variance must be > 0");
  SpectralFunction out(band, channels);
  const long n = out.n_modes();
  const long zero_idx = n / 2;  // center of the symmetric cube
  const double half_sd = std::sqrt(variance / 2.0);
  for (int p = 0; p < channels; ++p) {
    for (long idx = 0; idx < n; ++idx) {
      const long neg = n - 1 - idx;
      if (idx == zero_idx) {
        out.coeffs(idx, p) = Complex(rng.normal(0.0, std::sqrt(variance)), 0.0);
      } else if (idx < neg) {
        const Complex z(rng.normal(0.0, half_sd), rng.normal(0.0, half_sd));
        out.coeffs(idx, p) = z;
        out.coeffs(neg, p) = std::conj(z);
      }
    }
  }
  return out;
}

SpectralFunction sample_uniform_bandlimited(const std::vector<int>& band, Rng& rng) {
  std::vector<int> sizes(band.size());
  for (size_t j = 0; j < band.size(); ++j) sizes[j] = 2 * band[j] + 1;
  GridFunction nodal(TorusGrid(sizes), 1);
  for (long k = 0; k < nodal.grid.total(); ++k) nodal.values(k, 0) = rng.uniform(-1.0, 1.0);
  return fourier_coeffs(nodal, band);
}

Eigen::MatrixXd pairwise_inner_product(const SpectralFunction& f, const SpectralFunction& g,
                                       const TorusGrid& grid) {
  if (f.channels != g.channels)
    throw std::invalid_argument("pairwise_inner_product: channel mismatch");
  const Eigen::MatrixXd fv = evaluate_spectral(f, grid.points());
  const Eigen::MatrixXd gv = evaluate_spectral(g, grid.points());
  return fv * gv.transpose();  // H[p, q] = f(x_p) . g(x_q)
}

Eigen::MatrixXd pairwise_inner_product(const GridFunction& f, const GridFunction& g) {
  if (f.channels != g.channels)
    throw std::invalid_argument("pairwise_inner_product: channel mismatch");
  if (!(f.grid == g.grid))
    throw std::invalid_argument("pairwise_inner_product: grid mismatch");
  return f.values * g.values.transpose();
}

}  // namespace nogp
