#include "nogp/dual_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nogp/torus.hpp"

namespace nogp {

double relu_dual(double k11, double k12, double k22) {
  if (k11 < 0.0 || k22 < 0.0)
    throw std::invalid_argument("relu_dual: negative variance");
  const double scale = std::sqrt(k11 * k22);
  if (scale == 0.0) return 0.0;
  const double cos_t = std::clamp(k12 / scale, -1.0, 1.0);
  const double theta = std::acos(cos_t);
  return scale * (std::sin(theta) + (kPi - theta) * cos_t) / kTwoPi;
}

Eigen::MatrixXd apply_dual(ActivationKind kind, const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols()) throw std::invalid_argument("apply_dual: kernel must be square");
  if (kind == ActivationKind::Identity) return K;

  const Eigen::Index n = K.rows();
  Eigen::VectorXd diag(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double v = K(r, r);
    if (v < -1e-9)
      throw std::invalid_argument("apply_dual: diagonal entry below -1e-9");
    diag(r) = std::max(v, 0.0);
  }

  Eigen::MatrixXd out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      out(r, c) = relu_dual(diag(r), K(r, c), diag(c));
  return out;
}

}  // namespace nogp
