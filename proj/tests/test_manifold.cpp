#include "psphere/manifold.hpp"
#include "psphere/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace psphere;

namespace {

RealVec vec(std::initializer_list<double> xs) {
  RealVec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

RealVec e(Eigen::Index n, Eigen::Index i) {
  RealVec v = RealVec::Zero(n);
  v[i] = 1.0;
  return v;
}

// Independent oracle: least-squares projection of d onto the hyperplane
// {xi : <n, xi> = 0} via the KKT system [I n; n^T 0].
RealVec hyperplane_projection_oracle(const RealVec& n, const RealVec& d) {
  const Eigen::Index m = n.size();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + 1, m + 1);
  K.topLeftCorner(m, m).setIdentity();
  K.topRightCorner(m, 1) = n;
  K.bottomLeftCorner(1, m) = n.transpose();
  Eigen::VectorXd rhs(m + 1);
  rhs.head(m) = d;
  rhs[m] = 0.0;
  return K.fullPivLu().solve(rhs).head(m);
}

// Independent oracle for the 2-D p-ball projection: sweep the exact sphere
// parametrization and compare squared distances, with one refinement pass.
RealVec pball_projection_oracle_2d(const RealVec& c, double p) {
  const auto point_at = [&](double t) {
    const double ct = std::cos(t), st = std::sin(t);
    RealVec w(2);
    w[0] = ((ct < 0) ? -1.0 : 1.0) * std::pow(std::abs(ct), 2.0 / p);
    w[1] = ((st < 0) ? -1.0 : 1.0) * std::pow(std::abs(st), 2.0 / p);
    return w;
  };
  double best_t = 0.0, best_d = std::numeric_limits<double>::infinity();
  const int coarse = 400000;
  for (int i = 0; i < coarse; ++i) {
    const double t = 2.0 * M_PI * i / coarse;
    const double d = (point_at(t) - c).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_t = t;
    }
  }
  double lo = best_t - 2.0 * M_PI / coarse, hi = best_t + 2.0 * M_PI / coarse;
  for (int k = 0; k < 200; ++k) {  // golden-section refinement
    const double m1 = lo + 0.382 * (hi - lo);
    const double m2 = lo + 0.618 * (hi - lo);
    if ((point_at(m1) - c).squaredNorm() < (point_at(m2) - c).squaredNorm())
      hi = m2;
    else
      lo = m1;
  }
  return point_at(0.5 * (lo + hi));
}

const std::vector<double> kPFamily = {1.5, 2.0, 3.0, 4.0, 10.0, 100.0};

}  // namespace

TEST_CASE("SpherePNorm validation and smoothness bookkeeping") {
  CHECK_THROWS_AS(SpherePNorm(1, 2.0), InvalidInputError);
  CHECK_THROWS_AS(SpherePNorm(3, 1.0), InvalidInputError);
  CHECK_THROWS_AS(SpherePNorm(3, std::numeric_limits<double>::infinity()),
                  InvalidInputError);
  CHECK(SpherePNorm(5, 2.0).dim() == 4);
  CHECK(std::isinf(SpherePNorm(3, 4.0).smoothness_class()));
  CHECK(SpherePNorm(3, 3.0).smoothness_class() == 2.0);
  CHECK(SpherePNorm(3, 2.5).smoothness_class() == 2.0);
}

TEST_CASE("Point constructor renormalizes small drift and rejects large") {
  SpherePNorm m(2, 4.0);
  CHECK_NOTHROW(Point(m, vec({1.0, 0.0})));
  const Point drifted(m, vec({1.0 + 1e-8, 0.0}));
  CHECK(std::abs(pnorm(drifted.coords(), 4.0) - 1.0) <= 1e-12);
  CHECK_THROWS_AS(Point(m, vec({1.1, 0.0})), InvalidInputError);
  CHECK_THROWS_AS(Point(m, vec({1.0, 0.0, 0.0})), DimensionError);
}

TEST_CASE("Tangent constructor enforces tangency") {
  SpherePNorm m(2, 4.0);
  const Point x(m, vec({1.0, 0.0}));
  CHECK_NOTHROW(Tangent(x, vec({0.0, 0.7})));
  CHECK_THROWS_AS(Tangent(x, vec({0.5, 0.5})), InvalidInputError);
}

TEST_CASE("normal_direction closed forms") {
  for (double p : kPFamily) {
    SpherePNorm m(3, p);
    CHECK((normal_direction(Point(m, e(3, 0))) - e(3, 0)).norm() == 0.0);
  }
  SpherePNorm m2(2, 2.0);
  const Point x2(m2, vec({0.6, 0.8}));
  CHECK((normal_direction(x2) - vec({0.6, 0.8})).norm() <= 1e-15);

  SpherePNorm m4(2, 4.0);
  const double q = std::pow(2.0, -0.25);
  const Point x4(m4, vec({q, q}));
  CHECK((normal_direction(x4) - vec({std::pow(2.0, -0.75), std::pow(2.0, -0.75)}))
            .norm() <= 1e-15);
}

TEST_CASE("project closed forms and least-squares oracle") {
  SpherePNorm m2(2, 2.0);
  const Point xe1(m2, vec({1.0, 0.0}));
  CHECK((project(xe1, vec({3.0, -2.0})).vec() - vec({0.0, -2.0})).norm() <= 1e-15);

  // normal component annihilated
  SpherePNorm m3(3, 3.0);
  Rng rng(5);
  const Point x = random_sphere_point(rng, m3);
  const RealVec n = normal_direction(x);
  CHECK(project(x, RealVec(2.5 * n)).vec().norm() <= 1e-12);

  // p=4 diagonal point against the independent KKT oracle
  SpherePNorm m4(2, 4.0);
  const double q = std::pow(2.0, -0.25);
  const Point x4(m4, vec({q, q}));
  const RealVec got = project(x4, vec({1.0, 0.0})).vec();
  CHECK((got - vec({0.5, -0.5})).norm() <= 1e-12);
  const RealVec oracle =
      hyperplane_projection_oracle(normal_direction(x4), vec({1.0, 0.0}));
  CHECK((got - oracle).norm() <= 1e-12);
}

TEST_CASE("project is idempotent and tangent on random inputs") {
  Rng rng(17);
  for (double p : kPFamily) {
    SpherePNorm m(5, p);
    for (int trial = 0; trial < 20; ++trial) {
      const Point x = random_sphere_point(rng, m);
      const RealVec d = rng.normal_vec(5);
      const RealVec pd = project(x, d).vec();
      CHECK((project(x, pd).vec() - pd).norm() <= 1e-12 * std::max(1.0, pd.norm()));
      const RealVec n = normal_direction(x);
      CHECK(std::abs(pd.dot(n)) / n.norm() <= 1e-12 * std::max(1.0, pd.norm()));
    }
  }
}

TEST_CASE("retract at zero tangent is exact for all kinds") {
  Rng rng(23);
  for (double p : kPFamily) {
    SpherePNorm m(4, p);
    const Point x = random_sphere_point(rng, m);
    for (auto kind : {RetractionKind::Normalization, RetractionKind::Projective,
                      RetractionKind::Orthographic}) {
      CHECK(retract(kind, x, zero_tangent(x)).coords() == x.coords());
    }
  }
}

TEST_CASE("retraction closed forms") {
  // normalization, p=4
  SpherePNorm m4(2, 4.0);
  const Point xe1(m4, vec({1.0, 0.0}));
  const Point r = retract(RetractionKind::Normalization, xe1,
                          Tangent(xe1, vec({0.0, 1.0})));
  const double q = std::pow(2.0, -0.25);
  CHECK((r.coords() - vec({q, q})).norm() <= 1e-14);

  // orthographic, p=2: sqrt(1 - eta^T eta) x + eta
  SpherePNorm m2(2, 2.0);
  const Point ye1(m2, vec({1.0, 0.0}));
  const Point ro = retract(RetractionKind::Orthographic, ye1,
                           Tangent(ye1, vec({0.0, 0.8})));
  CHECK((ro.coords() - vec({0.6, 0.8})).norm() <= 1e-12);

  // projective, p=2: equals normalization
  const Point rp = retract(RetractionKind::Projective, ye1,
                           Tangent(ye1, vec({0.0, 0.75})));
  CHECK((rp.coords() - vec({0.8, 0.6})).norm() <= 1e-10);
}

TEST_CASE("orthographic retraction rejects oversized steps") {
  SpherePNorm m(2, 2.0);
  const Point x(m, vec({1.0, 0.0}));
  CHECK_THROWS_AS(
      retract(RetractionKind::Orthographic, x, Tangent(x, vec({0.0, 1.5}))),
      StepTooLargeError);
}

TEST_CASE("projective retraction matches the 2-D sweep oracle") {
  Rng rng(29);
  for (double p : {1.5, 3.0, 4.0, 10.0}) {
    SpherePNorm m(2, p);
    for (int trial = 0; trial < 5; ++trial) {
      const Point x = random_sphere_point(rng, m);
      const Tangent eta = random_tangent(rng, x, 0.4);
      const Point got = retract(RetractionKind::Projective, x, eta);
      const RealVec oracle =
          pball_projection_oracle_2d(RealVec(x.coords() + eta.vec()), p);
      CHECK((got.coords() - oracle).norm() <= 1e-7);
    }
  }
}

TEST_CASE("membership holds after every retraction") {
  Rng rng(31);
  for (double p : kPFamily) {
    for (int n : {2, 5, 20}) {
      SpherePNorm m(n, p);
      for (int trial = 0; trial < 10; ++trial) {
        const Point x = random_sphere_point(rng, m);
        const Tangent eta = random_tangent(rng, x, rng.uniform(0.0, 0.5));
        for (auto kind :
             {RetractionKind::Normalization, RetractionKind::Projective,
              RetractionKind::Orthographic}) {
          try {
            Point y = retract(kind, x, eta);
            CHECK(std::abs(pnorm(y.coords(), p) - 1.0) <= 1e-10);
          } catch (const StepTooLargeError&) {
            // orthographic line can miss the sphere at large p
            CHECK(kind == RetractionKind::Orthographic);
          }
        }
      }
    }
  }
}

TEST_CASE("||x + eta||_p > 1 for nonzero tangents") {
  Rng rng(37);
  for (double p : kPFamily) {
    SpherePNorm m(5, p);
    for (int trial = 0; trial < 40; ++trial) {
      const Point x = random_sphere_point(rng, m);
      const Tangent eta = random_tangent(rng, x, rng.uniform(1e-4, 0.5));
      if (eta.vec().isZero(0.0)) continue;
      const double grown = pnorm(RealVec(x.coords() + eta.vec()), p);
      if (p <= 10.0) {
        CHECK(grown > 1.0);  // strict growth is resolvable at moderate p
      } else {
        CHECK(grown >= 1.0 - 1e-15);  // margin can fall below one ulp
      }
    }
  }
}

TEST_CASE("retraction first-order rigidity") {
  Rng rng(41);
  for (double p : {1.5, 2.0, 3.0, 4.0, 10.0}) {
    SpherePNorm m(4, p);
    const Point x = random_sphere_point(rng, m);
    const Tangent eta = random_tangent(rng, x, 0.5);
    for (auto kind : {RetractionKind::Normalization, RetractionKind::Projective,
                      RetractionKind::Orthographic}) {
      std::vector<double> errs;
      for (double t : {1e-3, 1e-4, 1e-5}) {
        const Point y =
            retract(kind, x, Tangent::unchecked(x, RealVec(t * eta.vec())));
        errs.push_back(((y.coords() - x.coords()) / t - eta.vec()).norm());
      }
      CHECK(errs[1] < errs[0]);
      CHECK(errs[2] < errs[1]);
      CHECK(errs[1] <= 0.2 * errs[0] + 1e-10);  // ~linear decay in t
    }
  }
}

TEST_CASE("inverse retraction closed forms") {
  SpherePNorm m2(2, 2.0);
  const Point xe1(m2, vec({1.0, 0.0}));
  const Point y(m2, vec({0.8, 0.6}));

  // y = x returns the zero tangent exactly
  for (auto kind : {RetractionKind::Normalization, RetractionKind::Projective,
                    RetractionKind::Orthographic}) {
    CHECK(inverse_retract(kind, xe1, xe1).vec().isZero(0.0));
  }

  CHECK((inverse_retract(RetractionKind::Normalization, xe1, y).vec() -
         vec({0.0, 0.75}))
            .norm() <= 1e-14);
  CHECK((inverse_retract(RetractionKind::Projective, xe1, y).vec() -
         vec({0.0, 0.75}))
            .norm() <= 1e-12);

  // antipodal-style boundary: <n_x, e2> = 0 is out of domain
  const Point ye2(m2, vec({0.0, 1.0}));
  CHECK_THROWS_AS(inverse_retract(RetractionKind::Normalization, xe1, ye2),
                  OutOfDomainError);

  // orthographic x=e1, y=e2: alpha = 1 and eta = e2 by hand
  for (double p : kPFamily) {
    SpherePNorm m(2, p);
    const Point a(m, vec({1.0, 0.0}));
    const Point b(m, vec({0.0, 1.0}));
    const Tangent eta =
        inverse_retract(RetractionKind::Orthographic, a, b, false);
    CHECK((eta.vec() - vec({0.0, 1.0})).norm() <= 1e-14);
  }
}

TEST_CASE("projective inverse alpha matches the ball-projection oracle") {
  SpherePNorm m(2, 2.0);
  const Point x(m, vec({1.0, 0.0}));
  const Point y(m, vec({0.8, 0.6}));
  const Tangent eta = inverse_retract(RetractionKind::Projective, x, y);
  // feeding x + eta to the independent oracle must recover y
  const RealVec back = pball_projection_oracle_2d(RealVec(x.coords() + eta.vec()), 2.0);
  CHECK((back - y.coords()).norm() <= 1e-7);
  // alpha = (1 - <n_x, y>)/<n_x, n_y> = 0.25 here
  const double alpha =
      (1.0 - normal_direction(x).dot(y.coords())) /
      normal_direction(x).dot(normal_direction(y));
  CHECK(alpha == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("retract / inverse_retract round trips") {
  Rng rng(43);
  int in_domain = 0, total = 0;
  for (double p : kPFamily) {
    for (int n : {2, 5, 20}) {
      SpherePNorm m(n, p);
      for (int trial = 0; trial < 8; ++trial) {
        const Point x = random_sphere_point(rng, m);
        const Tangent eta = random_tangent(rng, x, rng.uniform(0.01, 0.3));
        for (auto kind :
             {RetractionKind::Normalization, RetractionKind::Projective,
              RetractionKind::Orthographic}) {
          Point y = x;
          try {
            y = retract(kind, x, eta);
          } catch (const StepTooLargeError&) {
            continue;
          }
          ++total;
          try {
            const Tangent back = inverse_retract(kind, x, y);
            ++in_domain;
            CHECK((back.vec() - eta.vec()).cwiseAbs().maxCoeff() <= 1e-8);
          } catch (const OutOfDomainError&) {
            // acceptable only rarely for small steps
          }
        }
      }
    }
  }
  CHECK(in_domain >= total * 95 / 100);
}

TEST_CASE("p=2 projective retraction coincides with normalization") {
  Rng rng(47);
  SpherePNorm m(4, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Point x = random_sphere_point(rng, m);
    const Tangent eta = random_tangent(rng, x, rng.uniform(0.0, 0.9));
    const Point a = retract(RetractionKind::Projective, x, eta);
    const Point b = retract(RetractionKind::Normalization, x, eta);
    CHECK((a.coords() - b.coords()).norm() <= 1e-10);
  }
}

TEST_CASE("transport at zero step is the identity") {
  Rng rng(53);
  SpherePNorm m(3, 4.0);
  const Point x = random_sphere_point(rng, m);
  const Tangent xi = random_tangent(rng, x, 1.0);
  for (auto kind :
       {TransportKind::DifferentiatedRetraction, TransportKind::Projection}) {
    CHECK((transport(kind, x, zero_tangent(x), xi).vec() - xi.vec()).norm() ==
          0.0);
  }
}

TEST_CASE("transport closed forms at p=2") {
  SpherePNorm m(2, 2.0);
  const Point x(m, vec({1.0, 0.0}));
  const Tangent eta(x, vec({0.0, 1.0}));
  const Tangent xi(x, vec({0.0, 1.0}));

  const double s = 1.0 / (2.0 * std::sqrt(2.0));
  const RealVec diff =
      transport(TransportKind::DifferentiatedRetraction, x, eta, xi).vec();
  CHECK((diff - vec({-s, s})).norm() <= 1e-14);

  const RealVec proj = transport(TransportKind::Projection, x, eta, xi).vec();
  CHECK((proj - vec({-0.5, 0.5})).norm() <= 1e-14);
}

TEST_CASE("differentiated transport matches finite differences") {
  Rng rng(59);
  for (double p : {1.5, 2.0, 3.0, 4.0, 10.0}) {
    SpherePNorm m(5, p);
    for (int trial = 0; trial < 20; ++trial) {
      const Point x = random_sphere_point(rng, m);
      const Tangent eta = random_tangent(rng, x, rng.uniform(0.0, 0.5));
      const Tangent xi = random_tangent(rng, x, 1.0);
      const RealVec got =
          transport(TransportKind::DifferentiatedRetraction, x, eta, xi).vec();

      const double t = 1e-6;
      const auto r_at = [&](double s) {
        return retract(RetractionKind::Normalization, x,
                       Tangent::unchecked(x, RealVec(eta.vec() + s * xi.vec())))
            .coords();
      };
      const RealVec fd = (r_at(t) - r_at(-t)) / (2.0 * t);
      CHECK((got - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("transports are tangent at the target and linear") {
  Rng rng(61);
  for (double p : kPFamily) {
    SpherePNorm m(5, p);
    for (int trial = 0; trial < 10; ++trial) {
      const Point x = random_sphere_point(rng, m);
      const Tangent eta = random_tangent(rng, x, rng.uniform(0.0, 0.5));
      const Tangent xi1 = random_tangent(rng, x, 1.0);
      const Tangent xi2 = random_tangent(rng, x, 1.0);
      const Point y = retract(RetractionKind::Normalization, x, eta);
      const RealVec ny = normal_direction(y);
      for (auto kind : {TransportKind::DifferentiatedRetraction,
                        TransportKind::Projection}) {
        const RealVec t1 = transport(kind, x, eta, xi1).vec();
        const RealVec t2 = transport(kind, x, eta, xi2).vec();
        CHECK(std::abs(t1.dot(ny)) / ny.norm() <= 1e-10 * xi1.vec().norm());

        const double a = 1.7, b = -0.3;
        const Tangent combo =
            Tangent::unchecked(x, RealVec(a * xi1.vec() + b * xi2.vec()));
        const RealVec tc = transport(kind, x, eta, combo).vec();
        CHECK((tc - (a * t1 + b * t2)).norm() <= 1e-10);
      }
    }
  }
}

TEST_CASE("extreme p values stay finite") {
  Rng rng(67);
  for (double p : {1.0 + 1e-6, 50000.0}) {
    SpherePNorm m(5, p);
    for (int trial = 0; trial < 5; ++trial) {
      const Point x = random_sphere_point(rng, m);
      const Tangent eta = random_tangent(rng, x, 0.3);
      const Tangent xi = random_tangent(rng, x, 1.0);
      for (auto kind : {RetractionKind::Normalization, RetractionKind::Projective,
                        RetractionKind::Orthographic}) {
        try {
          const Point y = retract(kind, x, eta);
          CHECK(y.coords().allFinite());
          CHECK(std::abs(pnorm(y.coords(), p) - 1.0) <= 1e-9);
        } catch (const StepTooLargeError&) {
          CHECK(kind == RetractionKind::Orthographic);
        }
      }
      CHECK(transport(TransportKind::DifferentiatedRetraction, x, eta, xi)
                .vec()
                .allFinite());
      CHECK(transport(TransportKind::Projection, x, eta, xi).vec().allFinite());
    }
  }
}
