#pragma once

// First-order Riemannian solvers on S^{n-1}_p: gradient descent with
// Armijo backtracking and conjugate gradient with a strong-Wolfe line
// search. The Wolfe derivative phi'(t) uses the differentiated retraction
// of the normalization map; for the other retractions it falls back to the
// projection transport, which is first-order consistent.

#include "psphere/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace psphere {

struct NotADescentDirectionError : std::domain_error {
  using std::domain_error::domain_error;
};

struct Problem {
  std::function<double(const RealVec&)> objective;
  std::function<RealVec(const RealVec&)> euclidean_gradient;
  std::string descriptor;
};

enum class SolveMethod { GD, CG };
enum class BetaRule { FletcherReeves, PolakRibierePlus };

struct SolverConfig {
  SolveMethod method = SolveMethod::CG;
  RetractionKind retraction = RetractionKind::Normalization;
  TransportKind transport = TransportKind::DifferentiatedRetraction;
  BetaRule beta_rule = BetaRule::FletcherReeves;
  double grad_tol = 1e-8;
  int max_iters = 10000;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.1;
  double initial_step = 1.0;
  std::uint64_t rng_seed = 0;
  // When set, the previous CG direction is carried to the new iterate via
  // -R^{-1}_{x_k}(x_{k-1}) / t_{k-1} instead of a vector transport.
  std::optional<RetractionKind> inverse_retraction_direction;

  void validate() const {
    if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
      throw InvalidInputError("SolverConfig: require 0 < c1 < c2 < 1");
    }
    if (!(grad_tol > 0.0)) throw InvalidInputError("SolverConfig: grad_tol <= 0");
    if (max_iters < 1) throw InvalidInputError("SolverConfig: max_iters < 1");
    if (!(initial_step > 0.0)) throw InvalidInputError("SolverConfig: initial_step <= 0");
  }
};

struct TraceEntry {
  int iteration;
  double objective;
  double grad_norm;
};

struct SolveResult {
  Point point;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
};

/// grad f(x) = P_x(grad f_bar(x)).
inline Tangent riemannian_gradient(const Problem& prob, const Point& x) {
  return project(x, prob.euclidean_gradient(x.coords()));
}

namespace detail {

inline double phi_eval(const Problem& prob, RetractionKind kind, const Point& x,
                       const Tangent& eta, double t, std::optional<Point>* out) {
  try {
    Point y = retract(kind, x, Tangent::unchecked(x, RealVec(t * eta.vec())));
    const double f = prob.objective(y.coords());
    if (out) *out = std::move(y);
    return f;
  } catch (const StepTooLargeError&) {
    if (out) out->reset();
    return std::numeric_limits<double>::infinity();
  }
}

// phi'(t) = <grad f(R_x(t eta)), D R_x(t eta)[eta]>.
inline double dphi_eval(const Problem& prob, RetractionKind kind, const Point& x,
                        const Tangent& eta, double t) {
  const Tangent teta = Tangent::unchecked(x, RealVec(t * eta.vec()));
  const TransportKind tk = (kind == RetractionKind::Normalization)
                               ? TransportKind::DifferentiatedRetraction
                               : TransportKind::Projection;
  const Tangent carried = transport(tk, x, teta, eta);
  const Point y = retract(kind, x, teta);
  const Tangent g = riemannian_gradient(prob, y);
  return g.vec().dot(carried.vec());
}

}  // namespace detail

/// Strong-Wolfe step along eta: phi(t) <= phi(0) + c1 t phi'(0) and
/// |phi'(t)| <= c2 |phi'(0)|, by bracket and zoom; falls back to the best
/// Armijo step when no Wolfe point is found within 60 evaluations.
inline double line_search_wolfe(const Problem& prob, const Point& x,
                                const Tangent& eta, const SolverConfig& cfg) {
  const double phi0 = prob.objective(x.coords());
  const Tangent g0 = riemannian_gradient(prob, x);
  const double dphi0 = g0.vec().dot(eta.vec());
  if (!(dphi0 < 0.0)) {
    throw NotADescentDirectionError("line_search_wolfe: phi'(0) = " +
                                    std::to_string(dphi0) + " >= 0");
  }

  const auto phi = [&](double t) {
    return detail::phi_eval(prob, cfg.retraction, x, eta, t, nullptr);
  };
  const auto dphi = [&](double t) {
    return detail::dphi_eval(prob, cfg.retraction, x, eta, t);
  };
  // Sufficient decrease with a rounding allowance: near a minimizer the true
  // decrease falls below the resolution of f, and the exact Armijo test
  // starts rejecting every step (Hager-Zhang approximate Wolfe idea).
  const double slack = 1e-14 * (1.0 + std::abs(phi0));
  const auto armijo = [&](double t, double ft) {
    return ft <= phi0 + cfg.wolfe_c1 * t * dphi0 + slack;
  };

  int evals = 0;
  double best_armijo_t = 0.0;
  double best_armijo_f = phi0;
  const auto note_armijo = [&](double t, double ft) {
    if (armijo(t, ft) && ft < best_armijo_f) {
      best_armijo_t = t;
      best_armijo_f = ft;
    }
  };

  const auto zoom = [&](double a_lo, double a_hi, double f_lo) -> double {
    for (; evals < 60;) {
      const double a = 0.5 * (a_lo + a_hi);
      const double fa = phi(a);
      ++evals;
      note_armijo(a, fa);
      if (!armijo(a, fa) || fa >= f_lo) {
        a_hi = a;
      } else {
        const double da = dphi(a);
        ++evals;
        if (std::abs(da) <= -cfg.wolfe_c2 * dphi0) return a;
        if (da * (a_hi - a_lo) >= 0.0) a_hi = a_lo;
        a_lo = a;
        f_lo = fa;
      }
      if (std::abs(a_hi - a_lo) < 1e-16 * std::max(1.0, std::abs(a_lo))) break;
    }
    return -1.0;
  };

  double a_prev = 0.0, f_prev = phi0;
  double a = cfg.initial_step;
  for (int i = 0; evals < 60; ++i) {
    const double fa = phi(a);
    ++evals;
    note_armijo(a, fa);
    if (!armijo(a, fa) || (i > 0 && fa >= f_prev)) {
      const double z = zoom(a_prev, a, f_prev);
      if (z > 0.0) return z;
      break;
    }
    const double da = dphi(a);
    ++evals;
    if (std::abs(da) <= -cfg.wolfe_c2 * dphi0) return a;
    if (da >= 0.0) {
      const double z = zoom(a, a_prev, fa);
      if (z > 0.0) return z;
      break;
    }
    a_prev = a;
    f_prev = fa;
    a *= 2.0;
  }

  if (best_armijo_t > 0.0) return best_armijo_t;

  // last resort: plain backtracking from the initial step
  double t = cfg.initial_step;
  for (int i = 0; i < 60; ++i, t *= 0.5) {
    const double ft = phi(t);
    if (armijo(t, ft)) return t;
  }
  throw NumericError("line_search_wolfe: no Armijo step found");
}

namespace detail {

inline double backtracking_armijo(const Problem& prob, const Point& x,
                                  const Tangent& eta, const SolverConfig& cfg,
                                  double phi0, double dphi0, double t_init) {
  const double slack = 1e-14 * (1.0 + std::abs(phi0));  // see line_search_wolfe
  double t = t_init;
  for (int i = 0; i < 60; ++i, t *= 0.5) {
    const double ft = phi_eval(prob, cfg.retraction, x, eta, t, nullptr);
    if (ft <= phi0 + cfg.wolfe_c1 * t * dphi0 + slack) return t;
  }
  throw NumericError("backtracking: no Armijo step found");
}

}  // namespace detail

inline SolveResult solve(const Problem& prob, const SpherePNorm& manifold,
                         const Point& x0, const SolverConfig& cfg) {
  cfg.validate();
  if (!(x0.manifold() == manifold)) {
    throw DimensionError("solve: x0 not on the given manifold");
  }

  Point x = x0;
  Tangent g = riemannian_gradient(prob, x);
  double f = prob.objective(x.coords());

  SolveResult res{x};
  std::optional<Point> x_prev;
  std::optional<Tangent> eta_prev;  // based at previous x
  std::optional<Tangent> g_prev;
  double t_prev = 0.0, dphi_prev = 0.0;

  for (int k = 0; k <= cfg.max_iters; ++k) {
    const double gnorm = g.vec().norm();
    res.trace.push_back({k, f, gnorm});
    res.point = x;
    res.objective = f;
    res.grad_norm = gnorm;
    res.iterations = k;
    if (gnorm <= cfg.grad_tol) {
      res.converged = true;
      return res;
    }
    if (k == cfg.max_iters) break;

    // Search direction.
    RealVec dir = -g.vec();
    if (cfg.method == SolveMethod::CG && eta_prev && g_prev) try {
      RealVec carried_dir, carried_g;
      const Tangent step_prev =
          Tangent::unchecked(*x_prev, RealVec(t_prev * eta_prev->vec()));
      if (cfg.inverse_retraction_direction) {
        carried_dir =
            -inverse_retract(*cfg.inverse_retraction_direction, x, *x_prev)
                 .vec() /
            t_prev;
        carried_g = transport(cfg.transport, *x_prev, step_prev, *g_prev).vec();
      } else {
        carried_dir =
            transport(cfg.transport, *x_prev, step_prev, *eta_prev).vec();
        carried_g = transport(cfg.transport, *x_prev, step_prev, *g_prev).vec();
      }
      const double gg = g.vec().squaredNorm();
      const double gg_prev = g_prev->vec().squaredNorm();
      double beta = 0.0;
      switch (cfg.beta_rule) {
        case BetaRule::FletcherReeves:
          beta = gg / gg_prev;
          break;
        case BetaRule::PolakRibierePlus:
          beta = std::max(0.0, g.vec().dot(g.vec() - carried_g) / gg_prev);
          break;
      }
      // Powell restart on loss of conjugacy.
      if (std::abs(g.vec().dot(carried_g)) > 0.2 * gg) beta = 0.0;
      if (beta != 0.0) dir = -g.vec() + beta * carried_dir;
    } catch (const OutOfDomainError&) {
      dir = -g.vec();  // previous iterate left the inverse's domain
    }

    double dphi0 = g.vec().dot(dir);
    if (!(dphi0 < 0.0)) {
      dir = -g.vec();
      dphi0 = g.vec().dot(dir);
    }
    Tangent eta = Tangent::unchecked(x, std::move(dir));

    // Seed the step from the previous slope ratio.
    SolverConfig step_cfg = cfg;
    if (t_prev > 0.0 && dphi0 < 0.0 && dphi_prev < 0.0) {
      step_cfg.initial_step =
          std::clamp(t_prev * dphi_prev / dphi0, 1e-12, 1e8);
    }

    double t;
    try {
      t = (cfg.method == SolveMethod::CG)
              ? line_search_wolfe(prob, x, eta, step_cfg)
              : detail::backtracking_armijo(prob, x, eta, step_cfg, f, dphi0,
                                            step_cfg.initial_step);
    } catch (const NumericError&) {
      if (eta.vec() == -g.vec()) {
        res.converged = false;
        return res;  // best point so far, line search exhausted
      }
      // restart once with steepest descent
      eta = Tangent::unchecked(x, RealVec(-g.vec()));
      dphi0 = -g.vec().squaredNorm();
      try {
        t = (cfg.method == SolveMethod::CG)
                ? line_search_wolfe(prob, x, eta, step_cfg)
                : detail::backtracking_armijo(prob, x, eta, step_cfg, f, dphi0,
                                              step_cfg.initial_step);
      } catch (const NumericError&) {
        res.converged = false;
        return res;
      }
    }

    Point x_next =
        retract(cfg.retraction, x, Tangent::unchecked(x, RealVec(t * eta.vec())));
    x_prev = x;
    eta_prev = eta;
    g_prev = g;
    t_prev = t;
    dphi_prev = dphi0;
    x = std::move(x_next);
    g = riemannian_gradient(prob, x);
    f = prob.objective(x.coords());
  }

  res.converged = false;
  return res;
}

/// Best-objective result over independent starts.
inline SolveResult solve_multistart(const Problem& prob,
                                    const SpherePNorm& manifold,
                                    const std::vector<Point>& starts,
                                    const SolverConfig& cfg) {
  if (starts.empty()) throw InvalidInputError("solve_multistart: no starts");
  std::optional<SolveResult> best;
  for (const Point& x0 : starts) {
    SolveResult r = solve(prob, manifold, x0, cfg);
    if (!best || r.objective < best->objective) best = std::move(r);
  }
  return *best;
}

}  // namespace psphere
