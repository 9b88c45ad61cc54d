#pragma once

// Scalar/vector kernels shared by the sphere geometry: p-norms in scaled
// form, sign-power maps, element-wise products and powers. Everything here
// is a pure function and must stay finite for p ranging from 1+1e-6 up to
// ~1e5, which rules out naive sum-of-powers evaluation.

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace psphere {

using RealVec = Eigen::VectorXd;

struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

inline void require_finite(const RealVec& v, const char* what) {
  if (v.size() == 0) {
    throw InvalidInputError(std::string(what) + ": empty vector");
  }
  if (!v.allFinite()) {
    throw InvalidInputError(std::string(what) + ": non-finite entry");
  }
}

inline void require_same_size(const RealVec& a, const RealVec& b,
                              const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": size mismatch " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

namespace detail {

// |w|^r via the log domain once r*log|w| leaves the directly representable
// range; underflow is flushed to exact zero. Magnitudes below 1e-300 count
// as zero so that r-1 near 0 (p = 1+1e-6) does not amplify denormal noise.
inline double pow_abs(double w, double r) {
  const double a = std::abs(w);
  if (a < 1e-300) return 0.0;
  const double t = r * std::log(a);
  if (t > 700.0) return std::pow(a, r);  // let it reach inf honestly
  if (t < -745.0) return 0.0;
  return std::exp(t);
}

}  // namespace detail

/// ‖v‖_p computed as m·‖v/m‖_p with m = max_i |v_i|, so that entries
/// spanning 1e-150..1e150 and p up to ~1e5 stay overflow-free.
/// Returns 0 for the zero vector.
inline double pnorm(const RealVec& v, double p) {
  require_finite(v, "pnorm");
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw InvalidInputError("pnorm: require finite p > 1");
  }
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    sum += detail::pow_abs(v[i] / m, p);
  }
  // sum >= 1 since at least one ratio equals 1
  return m * std::exp(std::log(sum) / p);
}

/// sgn(v) ⊙ |v|^{p-1}; entry is exactly 0 where v_i = 0. This is the
/// normal-direction vector of S^{n-1}_p without the factor p.
inline RealVec sign_power(const RealVec& v, double p) {
  require_finite(v, "sign_power");
  if (!(p > 1.0)) {
    throw InvalidInputError("sign_power: require p > 1");
  }
  if (p == 2.0) return v;  // exact identity map
  RealVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double s = (v[i] > 0.0) ? 1.0 : ((v[i] < 0.0) ? -1.0 : 0.0);
    out[i] = s * detail::pow_abs(v[i], p - 1.0);
  }
  return out;
}

inline RealVec hadamard(const RealVec& a, const RealVec& b) {
  require_same_size(a, b, "hadamard");
  return a.cwiseProduct(b);
}

/// (v_i^r) per entry; negative bases are allowed only for integer r.
inline RealVec elementwise_power(const RealVec& v, double r) {
  require_finite(v, "elementwise_power");
  const bool integer_r = (r == std::floor(r));
  RealVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0 && !integer_r) {
      throw DomainError("elementwise_power: negative base with fractional exponent");
    }
    out[i] = std::pow(v[i], r);
  }
  return out;
}

}  // namespace psphere
