#pragma once

#include "psphere/manifold.hpp"
#include "psphere/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace psphere {

// Property sweep over a (p, n) grid: draws random points and tangents and
// records worst-case residuals for the geometric identities the manifold
// layer promises. Used by both the CLI `geomcheck` command and the test
// harness.

struct GeomCheckProperty {
  std::string name;
  double worst = 0.0;
  double tolerance = 0.0;
  bool passed() const { return worst <= tolerance && std::isfinite(worst); }
};

struct GeomCheckReport {
  std::vector<GeomCheckProperty> properties;
  long samples = 0;
  long roundtrip_attempts = 0;
  long roundtrip_in_domain = 0;
  bool all_finite = true;

  bool passed() const {
    if (!all_finite) return false;
    for (const auto& pr : properties) {
      if (!pr.passed()) return false;
    }
    // in-domain coverage for small steps
    return roundtrip_in_domain * 100 >= roundtrip_attempts * 95;
  }
};

inline GeomCheckReport run_geomcheck(const std::vector<double>& ps,
                                     const std::vector<int>& ns,
                                     int samples_per_cell = 100,
                                     std::uint64_t seed = 12345) {
  GeomCheckReport rep;
  GeomCheckProperty membership{"retraction membership |  ||R_x(eta)||_p - 1 |",
                               0.0, 1e-9};
  GeomCheckProperty growth{"normalization margin  max(0, 1 - ||x + eta||_p)",
                           0.0, 0.0};
  GeomCheckProperty tangency{"projection tangency  |<n_x, P_x d>| / ||n_x||",
                             0.0, 1e-10};
  GeomCheckProperty idem{"projection idempotence  ||P_x(P_x d) - P_x d||",
                         0.0, 1e-12};
  GeomCheckProperty roundtrip{
      "round trip  ||R_x(R^{-1}_x(y)) - y||_inf (in-domain)", 0.0, 1e-8};
  GeomCheckProperty transport_tan{
      "transport tangency at target  |<n_y, T(xi)>| / ||n_y||", 0.0, 1e-10};
  GeomCheckProperty p2_equiv{
      "p=2 projective vs normalization  ||R^proj - R^norm||", 0.0, 1e-10};

  Rng rng(seed);
  const RetractionKind kinds[] = {RetractionKind::Normalization,
                                  RetractionKind::Projective,
                                  RetractionKind::Orthographic};
  for (double p : ps) {
    for (int n : ns) {
      SpherePNorm m(n, p);
      for (int s = 0; s < samples_per_cell; ++s) {
        ++rep.samples;
        const Point x = random_sphere_point(rng, m);
        const Tangent eta = random_tangent(rng, x, rng.uniform(1e-3, 0.3));
        const RealVec d = rng.normal_vec(n);

        if (!x.coords().allFinite()) rep.all_finite = false;
        growth.worst = std::max(
            growth.worst, 1.0 - pnorm(RealVec(x.coords() + eta.vec()), p));

        const RealVec nx = normal_direction(x);
        const RealVec pd = project(x, d).vec();
        if (!pd.allFinite() || !nx.allFinite()) rep.all_finite = false;
        const double dscale = std::max(1.0, d.norm());
        tangency.worst =
            std::max(tangency.worst, std::abs(pd.dot(nx)) / nx.norm() / dscale);
        idem.worst = std::max(
            idem.worst, (project(x, pd).vec() - pd).norm() / dscale);

        const Tangent xi = random_tangent(rng, x, 1.0);
        for (RetractionKind kind : kinds) {
          Point y = x;
          try {
            y = retract(kind, x, eta);
          } catch (const StepTooLargeError&) {
            continue;  // counted against round-trip coverage below
          }
          if (!y.coords().allFinite()) rep.all_finite = false;
          membership.worst =
              std::max(membership.worst, std::abs(pnorm(y.coords(), p) - 1.0));

          ++rep.roundtrip_attempts;
          try {
            const Tangent back = inverse_retract(kind, x, y);
            ++rep.roundtrip_in_domain;
            if (!back.vec().allFinite()) rep.all_finite = false;
            const Point y2 = retract(kind, x, back);
            roundtrip.worst = std::max(
                roundtrip.worst,
                (y2.coords() - y.coords()).cwiseAbs().maxCoeff());
          } catch (const OutOfDomainError&) {
          }
        }

        for (TransportKind tk : {TransportKind::DifferentiatedRetraction,
                                 TransportKind::Projection}) {
          const RealVec tv = transport(tk, x, eta, xi).vec();
          if (!tv.allFinite()) rep.all_finite = false;
          const Point y = retract(RetractionKind::Normalization, x, eta);
          const RealVec ny = normal_direction(y);
          transport_tan.worst = std::max(
              transport_tan.worst,
              std::abs(tv.dot(ny)) / ny.norm() / std::max(1.0, xi.vec().norm()));
        }

        if (p == 2.0) {
          const Point a = retract(RetractionKind::Projective, x, eta);
          const Point b = retract(RetractionKind::Normalization, x, eta);
          p2_equiv.worst =
              std::max(p2_equiv.worst, (a.coords() - b.coords()).norm());
        }
      }
    }
  }
  growth.worst = std::max(growth.worst, 0.0);

  rep.properties = {membership, growth,        tangency, idem,
                    roundtrip,  transport_tan, p2_equiv};
  return rep;
}

}  // namespace psphere
