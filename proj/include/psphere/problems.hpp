#pragma once

// The three application problem families: nonnegative PCA on S^{n-1}_4,
// sphere-constrained Lasso on S^{n-1}_{1+eps}, and box-constrained QP on
// S^{n-1}_p with large p. Also houses the NNPCA first-order (KKT) checker,
// the regularization/constraint grid oracles, and the two reference solvers
// (projected gradient on the box, coordinate-descent Lasso) used as
// independent baselines.

#include "psphere/optimizer.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace psphere {

using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Nonnegative PCA: min -v^T A v  s.t.  v >= 0, v in S^{n-1}_2, lifted to the
// unconstrained problem min -(x^2)^T A (x^2) on S^{n-1}_4 via v = x^2.

struct NnpcaInstance {
  Matrix A;

  explicit NnpcaInstance(Matrix a) : A(std::move(a)) {
    if (A.rows() != A.cols() || A.rows() < 1) {
      throw DimensionError("NnpcaInstance: A must be square");
    }
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidInputError("NnpcaInstance: A not symmetric");
    }
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) {
      throw InvalidInputError("NnpcaInstance: A not positive definite");
    }
  }

  Eigen::Index n() const { return A.rows(); }
};

inline Problem nnpca_problem(const NnpcaInstance& inst) {
  const Matrix A = inst.A;
  return Problem{
      [A](const RealVec& x) -> double {
        const RealVec v = x.cwiseProduct(x);
        return -v.dot(A * v);
      },
      [A](const RealVec& x) -> RealVec {
        const RealVec v = x.cwiseProduct(x);
        return RealVec(-4.0 * (A * v).cwiseProduct(x));
      },
      "nnpca"};
}

/// Closed-form Riemannian gradient of the lifted NNPCA objective on
/// S^{n-1}_4: -4((A x^2) .* x - ((x^4)^T A x^2 / ||x^3||_2^2) x^3).
inline Tangent nnpca_gradient_closed_form(const NnpcaInstance& inst,
                                          const Point& x) {
  const RealVec& xc = x.coords();
  const RealVec x2 = xc.cwiseProduct(xc);
  const RealVec x3 = x2.cwiseProduct(xc);
  const RealVec x4 = x2.cwiseProduct(x2);
  const RealVec Ax2 = inst.A * x2;
  const double scale = x4.dot(Ax2) / x3.squaredNorm();
  return Tangent::unchecked(
      x, RealVec(-4.0 * (Ax2.cwiseProduct(xc) - scale * x3)));
}

/// v = x^2, feasible for the quadratic sphere problem: v >= 0, ||v||_2 = 1.
inline RealVec nnpca_lift(const Point& x) {
  return x.coords().cwiseProduct(x.coords());
}

struct KktReport {
  RealVec v;
  double multiplier_mu = 0.0;        // v^T A v
  double residual_stationarity = 0.0;  // max positive entry of (I - vv^T)Av
  double residual_norm = 0.0;        // |v^T v - 1|
  double residual_nonneg = 0.0;      // max(0, -min_i v_i)
  bool passed = false;
  // Per-condition detail on the support {i : v_i > tol}:
  double support_eigen_residual = 0.0;  // max |(Av)_i - mu v_i| over support
  double off_support_max = 0.0;         // max (Av)_i over the complement
};

/// First-order conditions for the nonnegative PCA problem at candidate v:
/// v >= 0, v^T v = 1, (I - v v^T) A v <= 0.
inline KktReport kkt_check(const NnpcaInstance& inst, const RealVec& v,
                           double tol = 1e-6) {
  if (v.size() != inst.n()) throw DimensionError("kkt_check: size mismatch");
  if (!(tol > 0.0)) throw InvalidInputError("kkt_check: tol <= 0");

  KktReport rep;
  rep.v = v;
  const RealVec Av = inst.A * v;
  rep.multiplier_mu = v.dot(Av);
  const RealVec stat = Av - rep.multiplier_mu * v;  // (I - vv^T)Av
  rep.residual_stationarity = std::max(0.0, stat.maxCoeff());
  rep.residual_norm = std::abs(v.squaredNorm() - 1.0);
  rep.residual_nonneg = std::max(0.0, -v.minCoeff());

  rep.off_support_max = 0.0;
  rep.support_eigen_residual = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] > tol) {
      rep.support_eigen_residual =
          std::max(rep.support_eigen_residual,
                   std::abs(Av[i] - rep.multiplier_mu * v[i]));
    } else {
      rep.off_support_max = std::max(rep.off_support_max, Av[i]);
    }
  }

  rep.passed = rep.residual_stationarity <= tol && rep.residual_norm <= tol &&
               rep.residual_nonneg <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Sphere-constrained Lasso: min ||X w - y||_2^2 s.t. ||w||_p = C, solved as
// min f(x) = ||C X x - y||_2^2 on S^{n-1}_p with w = C x and p = 1 + eps.

struct LassoInstance {
  Matrix X;
  RealVec y;
  double C;
  double p;

  LassoInstance(Matrix x, RealVec y_, double c, double p_ = 1.0 + 1e-6)
      : X(std::move(x)), y(std::move(y_)), C(c), p(p_) {
    if (X.rows() < 1 || X.cols() < 1) throw DimensionError("LassoInstance: empty X");
    if (y.size() != X.rows()) throw DimensionError("LassoInstance: y length != rows(X)");
    if (!(C > 0.0)) throw InvalidInputError("LassoInstance: C <= 0");
    if (!(p > 1.0)) throw InvalidInputError("LassoInstance: p <= 1");
  }
};

inline Problem lasso_problem(const LassoInstance& inst) {
  const Matrix X = inst.X;
  const RealVec y = inst.y;
  const double C = inst.C;
  return Problem{
      [X, y, C](const RealVec& x) -> double {
        return (C * (X * x) - y).squaredNorm();
      },
      [X, y, C](const RealVec& x) -> RealVec {
        return RealVec(2.0 * C * (X.transpose() * (C * (X * x) - y)));
      },
      "lasso"};
}

/// min ||Xw - y||^2 + lambda ||w||_1 by cyclic coordinate descent with
/// soft thresholding. Baseline for the sphere-constrained route.
inline RealVec lasso_coordinate_descent(const Matrix& X, const RealVec& y,
                                        double lambda, int max_iters = 100000,
                                        double tol = 1e-12) {
  const Eigen::Index n = X.cols();
  RealVec w = RealVec::Zero(n);
  RealVec col_sq(n);
  for (Eigen::Index j = 0; j < n; ++j) col_sq[j] = X.col(j).squaredNorm();
  RealVec r = y;  // residual y - Xw
  for (int it = 0; it < max_iters; ++it) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (col_sq[j] == 0.0) continue;
      const double rho = X.col(j).dot(r) + col_sq[j] * w[j];
      const double thr = lambda / 2.0;
      double wj = 0.0;
      if (rho > thr) wj = (rho - thr) / col_sq[j];
      else if (rho < -thr) wj = (rho + thr) / col_sq[j];
      if (wj != w[j]) {
        r -= (wj - w[j]) * X.col(j);
        max_change = std::max(max_change, std::abs(wj - w[j]));
        w[j] = wj;
      }
    }
    if (max_change <= tol) break;
  }
  return w;
}

/// Regularization weight whose L1 problem has w as a stationary point:
/// the largest KKT multiplier magnitude max_i |2 x_i^T (y - Xw)|.
inline double matched_lasso_lambda(const Matrix& X, const RealVec& y,
                                   const RealVec& w) {
  return (2.0 * X.transpose() * (y - X * w)).cwiseAbs().maxCoeff();
}

/// Regularization weight matched to the constraint level C: the lambda whose
/// coordinate-descent solution satisfies ||w||_1 = C, so the regularized and
/// the norm-constrained problems share their solution. ||w(lambda)||_1 is
/// nonincreasing along the lasso path, which makes bisection applicable.
inline double lasso_lambda_for_radius(const Matrix& X, const RealVec& y,
                                      double C) {
  if (!(C > 0.0)) throw InvalidInputError("lasso_lambda_for_radius: C <= 0");
  double lo = 0.0;
  double hi = (2.0 * X.transpose() * y).cwiseAbs().maxCoeff();  // w(hi) = 0
  for (int k = 0; k < 200; ++k) {
    const double lam = 0.5 * (lo + hi);
    if (lasso_coordinate_descent(X, y, lam).lpNorm<1>() > C) lo = lam;
    else hi = lam;
    if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Box-constrained QP: min (1/2) w^T A w + c^T w  s.t.  l <= w <= u, mapped
// onto the sphere by w = a .* x + b with a = (u-l)/2, b = (l+u)/2 and the
// infinity-norm ball approximated by S^{n-1}_p with large p.

struct BoxQpInstance {
  Matrix A;
  RealVec c;
  RealVec l;
  RealVec u;
  double p;

  BoxQpInstance(Matrix a, RealVec c_, RealVec l_, RealVec u_, double p_)
      : A(std::move(a)), c(std::move(c_)), l(std::move(l_)), u(std::move(u_)), p(p_) {
    if (A.rows() != A.cols()) throw DimensionError("BoxQpInstance: A must be square");
    if (c.size() != A.rows() || l.size() != A.rows() || u.size() != A.rows()) {
      throw DimensionError("BoxQpInstance: vector size mismatch");
    }
    if (((u - l).array() <= 0.0).any()) {
      throw InvalidInputError("BoxQpInstance: require l < u elementwise");
    }
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidInputError("BoxQpInstance: A not symmetric");
    }
    if (!(p > 1.0)) throw InvalidInputError("BoxQpInstance: p <= 1");
  }

  double quadratic(const RealVec& w) const {
    return 0.5 * w.dot(A * w) + c.dot(w);
  }
};

struct BoxTransform {
  RealVec a;  // half-widths (u-l)/2
  RealVec b;  // midpoints (l+u)/2

  RealVec to_box(const RealVec& x) const { return a.cwiseProduct(x) + b; }
  RealVec to_sphere(const RealVec& w) const {
    return (w - b).cwiseQuotient(a);
  }
};

inline std::pair<Problem, BoxTransform> boxqp_problem(const BoxQpInstance& inst) {
  BoxTransform tf{(inst.u - inst.l) / 2.0, (inst.l + inst.u) / 2.0};
  const Matrix A = inst.A;
  const RealVec c = inst.c;
  const RealVec a = tf.a;
  const RealVec b = tf.b;
  Problem prob{
      [A, c, a, b](const RealVec& x) -> double {
        const RealVec w = a.cwiseProduct(x) + b;
        return 0.5 * w.dot(A * w) + c.dot(w);
      },
      [A, c, a, b](const RealVec& x) -> RealVec {
        const RealVec w = a.cwiseProduct(x) + b;
        return RealVec(a.cwiseProduct(A * w + c));
      },
      "boxqp"};
  return {std::move(prob), std::move(tf)};
}

/// Projected-gradient reference for the box QP: clamp to [l, u] each step
/// with fixed step 1/lambda_max(A). Baseline for the large-p trend.
inline RealVec box_projected_gradient(const BoxQpInstance& inst,
                                      int max_iters = 100000,
                                      double tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.A);
  const double step = 1.0 / es.eigenvalues().maxCoeff();
  RealVec w = (inst.l + inst.u) / 2.0;
  for (int it = 0; it < max_iters; ++it) {
    const RealVec g = inst.A * w + inst.c;
    const RealVec w_next =
        (w - step * g).cwiseMax(inst.l).cwiseMin(inst.u);
    const double change = (w_next - w).norm();
    w = w_next;
    if (change <= tol) break;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Grid witnesses for the regularized <-> constrained correspondence and the
// ball -> sphere reduction, on small convex quadratics.

struct GridSpec {
  RealVec lo;
  RealVec hi;
  int points_per_axis = 401;
};

namespace detail {

template <typename Visit>
void for_each_grid_point(const GridSpec& grid, Visit&& visit) {
  const Eigen::Index d = grid.lo.size();
  if (d < 1 || d > 3) throw InvalidInputError("grid oracle: require 1 <= dim <= 3");
  const int np = grid.points_per_axis;
  RealVec w(d);
  std::vector<int> idx(static_cast<size_t>(d), 0);
  const auto coord = [&](Eigen::Index k, int i) {
    return grid.lo[k] + (grid.hi[k] - grid.lo[k]) * i / (np - 1);
  };
  while (true) {
    for (Eigen::Index k = 0; k < d; ++k) w[k] = coord(k, idx[static_cast<size_t>(k)]);
    visit(w);
    Eigen::Index k = 0;
    for (; k < d; ++k) {
      if (++idx[static_cast<size_t>(k)] < np) break;
      idx[static_cast<size_t>(k)] = 0;
    }
    if (k == d) return;
  }
}

}  // namespace detail

struct EquivalenceWitness {
  double C = 0.0;
  double gap = 0.0;
  RealVec regularized_argmin;
};

/// Numeric witness of the regularized/constrained correspondence: grid-
/// minimize L(w) + lambda ||w||_p to get w*, set C = ||w*||_p, then grid-
/// minimize L over the C-ball and report the objective gap.
inline EquivalenceWitness equivalence_oracle_regularized_vs_constrained(
    const std::function<double(const RealVec&)>& L, double lambda, double p,
    const GridSpec& grid) {
  if (lambda < 0.0) throw InvalidInputError("equivalence oracle: lambda < 0");
  EquivalenceWitness wit;
  double best_reg = std::numeric_limits<double>::infinity();
  RealVec best_w;
  detail::for_each_grid_point(grid, [&](const RealVec& w) {
    const double val = L(w) + lambda * (w.isZero(0.0) ? 0.0 : pnorm(w, p));
    if (val < best_reg) {
      best_reg = val;
      best_w = w;
    }
  });
  wit.regularized_argmin = best_w;
  wit.C = best_w.isZero(0.0) ? 0.0 : pnorm(best_w, p);

  double best_con = std::numeric_limits<double>::infinity();
  const double slack = 1e-12 * std::max(1.0, wit.C);
  detail::for_each_grid_point(grid, [&](const RealVec& w) {
    const double nw = w.isZero(0.0) ? 0.0 : pnorm(w, p);
    if (nw <= wit.C + slack) best_con = std::min(best_con, L(w));
  });
  wit.gap = std::abs(L(best_w) - best_con);
  return wit;
}

struct BallSphereWitness {
  bool applicable = false;  // unconstrained minimizer strictly outside the ball
  bool confirmed = false;   // ball optimum matches the sphere optimum
  double gap = 0.0;
};

/// Prop-style reduction check in 2-D: when every minimizer of L lies outside
/// the C-ball, the ball-constrained optimum is attained on the sphere. The
/// ball side is a grid scan; the sphere side sweeps the exact p-sphere
/// parametrization w(t) = C (sgn(cos t)|cos t|^{2/p}, sgn(sin t)|sin t|^{2/p}).
inline BallSphereWitness ball_to_sphere_witness(
    const std::function<double(const RealVec&)>& L, double C, double p,
    const GridSpec& grid, double tol = 1e-3) {
  if (grid.lo.size() != 2) {
    throw InvalidInputError("ball_to_sphere_witness: 2-D fixtures only");
  }
  if (!(C > 0.0)) throw InvalidInputError("ball_to_sphere_witness: C <= 0");

  BallSphereWitness wit;

  double best_unc = std::numeric_limits<double>::infinity();
  RealVec unc_argmin;
  double best_ball = std::numeric_limits<double>::infinity();
  RealVec ball_argmin;
  detail::for_each_grid_point(grid, [&](const RealVec& w) {
    const double val = L(w);
    if (val < best_unc) {
      best_unc = val;
      unc_argmin = w;
    }
    const double nw = w.isZero(0.0) ? 0.0 : pnorm(w, p);
    if (nw <= C && val < best_ball) {
      best_ball = val;
      ball_argmin = w;
    }
  });
  if (unc_argmin.isZero(0.0) || pnorm(unc_argmin, p) <= C) {
    return wit;  // minimizer inside the ball: reduction not applicable
  }
  wit.applicable = true;

  // refine the ball-side minimum: rescan shrinking windows around the argmin
  double spacing = (grid.hi[0] - grid.lo[0]) / (grid.points_per_axis - 1);
  for (int level = 0; level < 4 && ball_argmin.size() == 2; ++level) {
    const GridSpec local{RealVec(ball_argmin.array() - 2.0 * spacing),
                         RealVec(ball_argmin.array() + 2.0 * spacing), 201};
    detail::for_each_grid_point(local, [&](const RealVec& w) {
      const double nw = w.isZero(0.0) ? 0.0 : pnorm(w, p);
      if (nw > C) return;
      const double val = L(w);
      if (val < best_ball) {
        best_ball = val;
        ball_argmin = w;
      }
    });
    spacing *= 4.0 / 200.0;
  }

  double best_sphere = std::numeric_limits<double>::infinity();
  const int sweeps = 200000;
  RealVec w(2);
  for (int i = 0; i < sweeps; ++i) {
    const double t = 2.0 * M_PI * i / sweeps;
    const double ct = std::cos(t), st = std::sin(t);
    w[0] = C * ((ct < 0) ? -1.0 : 1.0) * std::pow(std::abs(ct), 2.0 / p);
    w[1] = C * ((st < 0) ? -1.0 : 1.0) * std::pow(std::abs(st), 2.0 / p);
    best_sphere = std::min(best_sphere, L(w));
  }

  wit.gap = std::abs(best_ball - best_sphere);
  wit.confirmed = wit.gap <= tol;
  return wit;
}

}  // namespace psphere
