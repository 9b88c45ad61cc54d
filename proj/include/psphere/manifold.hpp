#pragma once

// Geometry of the unit p-norm sphere S^{n-1}_p, 1 < p < inf, as a Riemannian
// submanifold of R^n with the standard inner product: point/tangent types,
// the tangent-space projection, three retractions with their inverses, and
// two vector transports.
//
// The normal space at x is spanned by n_x = sgn(x) .* |x|^{p-1}. All
// formulas below are written against n_x; large-p overflow is avoided by
// evaluating sign-powers only at unit-norm arguments.

#include "psphere/core.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace psphere {

struct OutOfDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Tangent step leaves the region where the orthographic retraction has a
// real solution; callers should shrink the step.
struct StepTooLargeError : std::domain_error {
  using std::domain_error::domain_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RetractionKind { Normalization, Projective, Orthographic };
enum class TransportKind { DifferentiatedRetraction, Projection };

class SpherePNorm {
 public:
  SpherePNorm(Eigen::Index n, double p, double tol_membership = 1e-10)
      : n_(n), p_(p), tol_(tol_membership) {
    if (n < 2) throw InvalidInputError("SpherePNorm: require n >= 2");
    if (!(p > 1.0) || !std::isfinite(p)) {
      throw InvalidInputError("SpherePNorm: require 1 < p < inf");
    }
    if (tol_membership < 0.0) {
      throw InvalidInputError("SpherePNorm: negative tolerance");
    }
  }

  Eigen::Index ambient_dim() const { return n_; }
  Eigen::Index dim() const { return n_ - 1; }
  double p() const { return p_; }
  double tol_membership() const { return tol_; }

  // C^r smoothness class of the submanifold: inf for even integer p,
  // p-1 for odd integer p, floor(p) otherwise. Recorded for documentation;
  // no operation consumes it.
  double smoothness_class() const {
    if (p_ == std::floor(p_)) {
      const long ip = static_cast<long>(p_);
      if (ip % 2 == 0) return std::numeric_limits<double>::infinity();
      return p_ - 1.0;
    }
    return std::floor(p_);
  }

  bool operator==(const SpherePNorm& o) const {
    return n_ == o.n_ && p_ == o.p_;
  }

 private:
  Eigen::Index n_;
  double p_;
  double tol_;
};

class Point {
 public:
  // Validating constructor: accepts coords whose p-norm deviates from 1 by
  // at most 1e-6 and renormalizes drift above the membership tolerance.
  Point(const SpherePNorm& m, RealVec coords) : manifold_(m), coords_(std::move(coords)) {
    require_finite(coords_, "Point");
    if (coords_.size() != m.ambient_dim()) {
      throw DimensionError("Point: coords length does not match manifold dimension");
    }
    const double r = pnorm(coords_, m.p());
    const double violation = std::abs(r - 1.0);
    if (violation > 1e-6) {
      throw InvalidInputError("Point: p-norm deviates from 1 by " +
                              std::to_string(violation));
    }
    if (violation > m.tol_membership()) coords_ /= r;
  }

  static Point unchecked(const SpherePNorm& m, RealVec coords) {
    Point pt;
    pt.manifold_ = m;
    pt.coords_ = std::move(coords);
    return pt;
  }

  const SpherePNorm& manifold() const { return *manifold_; }
  const RealVec& coords() const { return coords_; }

 private:
  Point() = default;
  std::optional<SpherePNorm> manifold_;
  RealVec coords_;
};

class Tangent {
 public:
  // Validating constructor: re-projects small tangency drift, rejects above
  // 1e-6 relative to the vector scale.
  Tangent(Point base, RealVec vec);

  static Tangent unchecked(Point base, RealVec vec) {
    Tangent t;
    t.base_ = std::move(base);
    t.vec_ = std::move(vec);
    return t;
  }

  const Point& base() const { return *base_; }
  const RealVec& vec() const { return vec_; }

 private:
  Tangent() = default;
  std::optional<Point> base_;
  RealVec vec_;
};

/// n_x = sgn(x) .* |x|^{p-1}, spanning the normal space at x.
inline RealVec normal_direction(const Point& x) {
  return sign_power(x.coords(), x.manifold().p());
}

/// Orthogonal projection of an ambient vector onto the tangent space at x.
inline Tangent project(const Point& x, const RealVec& d) {
  require_same_size(d, x.coords(), "project");
  const RealVec n = normal_direction(x);
  const double nn = n.squaredNorm();
  return Tangent::unchecked(x, d - (n.dot(d) / nn) * n);
}

inline Tangent::Tangent(Point base, RealVec vec) {
  require_finite(vec, "Tangent");
  require_same_size(vec, base.coords(), "Tangent");
  const RealVec n = sign_power(base.coords(), base.manifold().p());
  const double scale = std::max(1.0, vec.norm());
  const double violation = std::abs(n.dot(vec)) / n.norm();
  if (violation > 1e-6 * scale) {
    throw InvalidInputError("Tangent: not orthogonal to the normal direction");
  }
  if (violation > base.manifold().tol_membership() * scale) {
    vec -= (n.dot(vec) / n.squaredNorm()) * n;
  }
  base_ = std::move(base);
  vec_ = std::move(vec);
}

inline Tangent zero_tangent(const Point& x) {
  return Tangent::unchecked(x, RealVec::Zero(x.coords().size()));
}

namespace detail {

// Sign of d/dalpha ||v(alpha)||_p evaluated at v = c - alpha*d, computed
// from the unit-normalized argument so that large p cannot overflow.
inline double pnorm_slope_sign(const RealVec& v, double w, const RealVec& d,
                               double p) {
  if (w == 0.0) return 0.0;
  const RealVec nu = sign_power(RealVec(v / w), p);
  return -d.dot(nu);
}

struct OrthographicRoot {
  double alpha;
  double residual;  // |w(alpha) - 1|
};

// Root of ||x + eta - alpha * n_x||_p = 1 with the smallest |alpha|.
// w(alpha) is convex with w(0) >= 1; locate the minimizer by bisecting the
// derivative sign, then bracket-and-bisect a root on each side.
inline OrthographicRoot orthographic_smallest_root(const RealVec& c,
                                                   const RealVec& d,
                                                   double p) {
  const auto w = [&](double a) { return pnorm(RealVec(c - a * d), p); };
  const auto slope = [&](double a) {
    const RealVec v = c - a * d;
    return pnorm_slope_sign(v, pnorm(v, p), d, p);
  };

  const double w0 = w(0.0);
  const double s0 = slope(0.0);

  // Bracket the minimizer of w.
  double lo = 0.0, hi = 0.0;
  if (s0 == 0.0) {
    lo = hi = 0.0;
  } else {
    const double dir = (s0 < 0.0) ? 1.0 : -1.0;
    double step = 1.0;
    double a = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double b = a + dir * step;
      if (slope(b) * s0 <= 0.0) {
        lo = std::min(a, b);
        hi = std::max(a, b);
        break;
      }
      a = b;
      step *= 2.0;
      if (k == 199) throw NumericError("orthographic: minimizer bracket failed");
    }
    for (int k = 0; k < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++k) {
      const double mid = 0.5 * (lo + hi);
      if (slope(mid) < 0.0) lo = mid; else hi = mid;
    }
  }
  const double amin = 0.5 * (lo + hi);
  const double wmin = w(amin);
  if (wmin > 1.0 + 1e-13) {
    throw StepTooLargeError("orthographic retraction: no real solution for this step");
  }
  if (wmin >= 1.0 - 1e-15) {
    // grazing case: the two roots coincide at the minimizer
    return {amin, std::abs(wmin - 1.0)};
  }
  (void)w0;

  // Bisect w - 1 on a monotone side; g(outer) >= 0 >= g(inner).
  const auto bisect_root = [&](double inner, double outer) {
    double a_in = inner, a_out = outer;
    for (int k = 0; k < 300; ++k) {
      const double mid = 0.5 * (a_in + a_out);
      const double g = w(mid) - 1.0;
      if (std::abs(g) <= 1e-14) return mid;
      if (g < 0.0) a_in = mid; else a_out = mid;
      if (std::abs(a_out - a_in) <=
          1e-18 + 1e-16 * std::max(std::abs(a_in), std::abs(a_out))) {
        break;
      }
    }
    return 0.5 * (a_in + a_out);
  };

  double root_near, root_far;
  if (amin >= 0.0) {
    // left root lies in [0, amin] because w(0) >= 1 >= wmin
    root_near = bisect_root(amin, 0.0);
    double far = std::max(1.0, 2.0 * amin - root_near);
    for (int k = 0; k < 200 && w(far) < 1.0; ++k) far = amin + 2.0 * (far - amin);
    root_far = bisect_root(amin, far);
  } else {
    root_near = bisect_root(amin, 0.0);
    double far = std::min(-1.0, 2.0 * amin - root_near);
    for (int k = 0; k < 200 && w(far) < 1.0; ++k) far = amin + 2.0 * (far - amin);
    root_far = bisect_root(amin, far);
  }
  const double alpha =
      (std::abs(root_near) <= std::abs(root_far)) ? root_near : root_far;
  return {alpha, std::abs(w(alpha) - 1.0)};
}

// 2-norm projection of c (with ||c||_p >= 1) onto the unit p-ball via
// Lagrange dualization: each coordinate solves the strictly increasing
// scalar equation t + lambda*p*t^{p-1} = |c_i|, and an outer bisection on
// lambda >= 0 drives ||z(lambda)||_p to 1.
struct BallProjectionOptions {
  double inner_tol = 1e-14;
  double outer_tol = 1e-12;
  int max_outer = 200;
};

inline RealVec project_to_unit_pball(const RealVec& c, double p,
                                     const BallProjectionOptions& opt = {}) {
  const double cnorm = pnorm(c, p);
  if (cnorm <= 1.0 + opt.outer_tol) return c;

  const auto coordinate_solve = [&](double a, double lambda) {
    // t + lambda*p*t^{p-1} = a is strictly increasing in t on [0, a];
    // Newton safeguarded by the shrinking bracket.
    const auto f = [&](double t) {
      const double pen = lambda * p * pow_abs(t, p - 1.0);
      return (std::isfinite(pen) ? t + pen : pen) - a;
    };
    double lo = 0.0, hi = a;
    double t = a;
    double step = hi - lo;  // width the previous iteration achieved
    for (int k = 0; k < 200; ++k) {
      const double ft = f(t);
      if (std::abs(ft) <= 1e-15 * std::max(1.0, a)) return t;
      if (ft > 0.0) hi = t; else lo = t;
      if (hi - lo <= opt.inner_tol * std::max(1.0, a)) break;
      // Newton, but only when it stays bracketed and at least halves the
      // previous step; otherwise bisect. For large p the penalty term is
      // exponential-like and an unguarded Newton iterate crawls toward the
      // root ~t/(p-1) per step from the steep side.
      double tn = 0.0;
      bool newton_ok = false;
      const double fp = 1.0 + lambda * p * (p - 1.0) * pow_abs(t, p - 2.0);
      if (std::isfinite(ft) && std::isfinite(fp)) {
        const double dt = ft / fp;
        if (std::abs(2.0 * dt) <= step) {
          tn = t - dt;
          newton_ok = tn > lo && tn < hi && tn != t;
        }
      }
      if (newton_ok) {
        step = std::abs(t - tn);
      } else {
        tn = 0.5 * (lo + hi);
        step = 0.5 * (hi - lo);
      }
      t = tn;
    }
    return 0.5 * (lo + hi);
  };

  const auto z_of = [&](double lambda) {
    RealVec z(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double a = std::abs(c[i]);
      const double t = (a == 0.0) ? 0.0 : coordinate_solve(a, lambda);
      z[i] = (c[i] < 0.0) ? -t : t;
    }
    return z;
  };

  // Bracket lambda: g(0) = ||c||_p - 1 > 0, g decreasing.
  double lam_lo = 0.0, lam_hi = 1.0;
  for (int k = 0; k < 200; ++k) {
    if (pnorm(z_of(lam_hi), p) < 1.0) break;
    lam_lo = lam_hi;
    lam_hi *= 4.0;
    if (k == 199) throw NumericError("p-ball projection: multiplier bracket failed");
  }

  RealVec z;
  for (int k = 0; k < opt.max_outer; ++k) {
    const double lam = 0.5 * (lam_lo + lam_hi);
    z = z_of(lam);
    const double g = pnorm(z, p) - 1.0;
    if (std::abs(g) <= opt.outer_tol) return z;
    if (g > 0.0) lam_lo = lam; else lam_hi = lam;
    if (lam_hi - lam_lo <= 1e-18 * std::max(1.0, lam_hi)) break;
  }
  z = z_of(0.5 * (lam_lo + lam_hi));
  if (std::abs(pnorm(z, p) - 1.0) <= 1e-9) return z;  // multiplier resolution limit
  throw NumericError("p-ball projection did not converge");
}

}  // namespace detail

/// R_x(eta) for the requested retraction kind. R_x(0) = x exactly.
inline Point retract(RetractionKind kind, const Point& x, const Tangent& eta) {
  const double p = x.manifold().p();
  const RealVec& v = eta.vec();
  if (v.isZero(0.0)) return x;
  const RealVec c = x.coords() + v;

  switch (kind) {
    case RetractionKind::Normalization: {
      return Point::unchecked(x.manifold(), c / pnorm(c, p));
    }
    case RetractionKind::Projective: {
      return Point::unchecked(x.manifold(), detail::project_to_unit_pball(c, p));
    }
    case RetractionKind::Orthographic: {
      const RealVec d = normal_direction(x);
      const auto root = detail::orthographic_smallest_root(c, d, p);
      return Point::unchecked(x.manifold(), c - root.alpha * d);
    }
  }
  throw InvalidInputError("retract: unknown retraction kind");
}

/// eta with R_x(eta) = y, for the requested kind. Throws OutOfDomainError
/// when y lies outside the inverse's domain, naming the violated condition.
inline Tangent inverse_retract(RetractionKind kind, const Point& x,
                               const Point& y,
                               bool verify_orthographic_domain = true) {
  if (!(x.manifold() == y.manifold())) {
    throw DimensionError("inverse_retract: points on different manifolds");
  }
  if (x.coords() == y.coords()) return zero_tangent(x);

  const double p = x.manifold().p();
  const RealVec nx = normal_direction(x);

  switch (kind) {
    case RetractionKind::Normalization: {
      const double s = nx.dot(y.coords());
      if (!(s > 0.0)) {
        throw OutOfDomainError(
            "normalization inverse: <n_x, y> = " + std::to_string(s) +
            " violates <n_x, y> > 0");
      }
      return Tangent::unchecked(x, y.coords() / s - x.coords());
    }
    case RetractionKind::Projective: {
      const RealVec ny = normal_direction(y);
      const double denom = nx.dot(ny);
      if (denom == 0.0) {
        throw OutOfDomainError("projective inverse: <n_x, n_y> = 0");
      }
      double alpha = (1.0 - nx.dot(y.coords())) / denom;
      if (alpha < -1e-12) {
        throw OutOfDomainError("projective inverse: alpha = " +
                               std::to_string(alpha) + " violates alpha >= 0");
      }
      alpha = std::max(alpha, 0.0);
      RealVec eta = y.coords() - x.coords() + alpha * ny;
      eta -= (nx.dot(eta) / nx.squaredNorm()) * nx;  // shed rounding drift
      return Tangent::unchecked(x, std::move(eta));
    }
    case RetractionKind::Orthographic: {
      const double alpha = (1.0 - nx.dot(y.coords())) / nx.squaredNorm();
      RealVec eta = y.coords() - x.coords() + alpha * nx;
      eta -= (nx.dot(eta) / nx.squaredNorm()) * nx;
      if (verify_orthographic_domain) {
        // alpha must be the smallest-|alpha| root of the forward equation;
        // the only sound check is to re-run the root isolation at (x, eta).
        double root;
        try {
          root = detail::orthographic_smallest_root(RealVec(x.coords() + eta),
                                                    nx, p)
                     .alpha;
        } catch (const StepTooLargeError&) {
          throw OutOfDomainError(
              "orthographic inverse: forward equation has no solution at eta");
        }
        if (std::abs(root - alpha) > 1e-9 * std::max(1.0, std::abs(alpha))) {
          throw OutOfDomainError(
              "orthographic inverse: alpha is not the smallest-|alpha| root");
        }
      }
      return Tangent::unchecked(x, std::move(eta));
    }
  }
  throw InvalidInputError("inverse_retract: unknown retraction kind");
}

/// Vector transport of xi along eta, relative to the normalization
/// retraction. Result is tangent at R_x(eta).
inline Tangent transport(TransportKind kind, const Point& x, const Tangent& eta,
                         const Tangent& xi) {
  const double p = x.manifold().p();
  if (eta.vec().isZero(0.0)) {
    return Tangent::unchecked(x, xi.vec());
  }
  const RealVec z = x.coords() + eta.vec();
  const double r = pnorm(z, p);
  const Point target = Point::unchecked(x.manifold(), z / r);
  const RealVec nu = normal_direction(target);

  switch (kind) {
    case TransportKind::DifferentiatedRetraction: {
      // D R_x(eta)[xi] = xi/||z||_p - (n_z^T xi / ||z||_p^{p+1}) z, rescaled
      // through the unit point u = z/||z||_p to stay finite for large p.
      return Tangent::unchecked(
          target, (xi.vec() - nu.dot(xi.vec()) * target.coords()) / r);
    }
    case TransportKind::Projection: {
      return Tangent::unchecked(
          target, xi.vec() - (nu.dot(xi.vec()) / nu.squaredNorm()) * nu);
    }
  }
  throw InvalidInputError("transport: unknown transport kind");
}

}  // namespace psphere
