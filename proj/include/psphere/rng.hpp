#pragma once

// Deterministic instance generation. mt19937_64 output is fully specified
// by the standard and the derived uniform/normal draws use only IEEE
// arithmetic, so a seed reproduces the same instance on any platform.

#include "psphere/manifold.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace psphere {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller (platform-independent, unlike
  /// std::normal_distribution).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  RealVec normal_vec(Eigen::Index n) {
    RealVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::MatrixXd normal_mat(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// A = G^T G + delta I with G standard normal and delta = 1e-3 * n.
inline Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index n) {
  const Eigen::MatrixXd g = rng.normal_mat(n, n);
  return g.transpose() * g +
         (1e-3 * static_cast<double>(n)) *
             Eigen::MatrixXd::Identity(n, n);
}

inline Point random_sphere_point(Rng& rng, const SpherePNorm& m) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    RealVec v = rng.normal_vec(m.ambient_dim());
    const double r = pnorm(v, m.p());
    if (r > 1e-8) return Point::unchecked(m, v / r);
  }
  throw NumericError("random_sphere_point: degenerate draws");
}

/// Random tangent at x with the requested 2-norm (zero if the projected
/// draw degenerates).
inline Tangent random_tangent(Rng& rng, const Point& x, double norm2) {
  const Tangent t = project(x, rng.normal_vec(x.coords().size()));
  const double r = t.vec().norm();
  if (r < 1e-12) return zero_tangent(x);
  return Tangent::unchecked(x, RealVec(t.vec() * (norm2 / r)));
}

/// Strictly positive start for NNPCA runs: entries |N(0,1)| + 0.1,
/// p-normalized. Positive starts avoid the coordinate-axis saddles that the
/// sign symmetry x <-> -x would otherwise make attractive.
inline Point nnpca_start(Rng& rng, const SpherePNorm& m) {
  RealVec v(m.ambient_dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = std::abs(rng.normal()) + 0.1;
  }
  return Point::unchecked(m, RealVec(v / pnorm(v, m.p())));
}

}  // namespace psphere
