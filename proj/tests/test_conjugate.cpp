#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lrtk/geodesic.hpp"
#include "lrtk/metric.hpp"
#include "oracles.hpp"

using namespace lrtk;

TEST_CASE("round sphere: first conjugate parameter is pi") {
  const SpacetimeMetric s2 = make_sphere_slice();
  const VecN base(-1.0, 0.0);
  const VecN theta(1.0, 0.0);  // through the pole, stays in the chart
  const auto scan = conjugate_scan(s2, 0.0, base, theta, 3.3);
  REQUIRE(scan.records.size() == 1);
  CHECK(std::abs(scan.records[0].s_star - M_PI) < 1e-6);
  CHECK(scan.records[0].kernel_dim == 1);
  // Degenerate (non-fold) point: the antipodal caustic of the round sphere.
  CHECK_FALSE(scan.records[0].fold);
}

TEST_CASE("round sphere: generic direction still conjugates at pi") {
  const SpacetimeMetric s2 = make_sphere_slice();
  const VecN base(-0.9, 0.15);
  // Direction tilted toward the pole so the geodesic stays inside r < pi.
  VecN u(1.0, -0.12);
  const MatN h = s2.h(0.0, base);
  const double inv = 1.0 / std::sqrt(dot(u, matvec(h, u)));
  VecN theta(u[0] * inv, u[1] * inv);
  const auto scan = conjugate_scan(s2, 0.0, base, theta, 3.3);
  REQUIRE(scan.records.size() == 1);
  CHECK(std::abs(scan.records[0].s_star - M_PI) < 1e-6);
}

TEST_CASE("flat and negatively curved slices have empty conjugate sets") {
  const SpacetimeMetric mink = make_minkowski(2);
  const auto flat = conjugate_scan(mink, 0.0, VecN(0.0, 0.0), VecN(0.0, 1.0), 12.0);
  CHECK(flat.records.empty());
  CHECK_FALSE(flat.truncated);

  const SpacetimeMetric hyp = make_hyperbolic_like(0.3);
  const MatN h = hyp.h(0.0, VecN(0.1, -0.2));
  VecN u(0.8, 0.6);
  const double inv = 1.0 / std::sqrt(dot(u, matvec(h, u)));
  u *= inv;
  const auto neg = conjugate_scan(hyp, 0.0, VecN(0.1, -0.2), u, 4.0);
  CHECK(neg.records.empty());
}

TEST_CASE("perturbed sphere: fold-type conjugate point on generic rays") {
  // Break the rotational symmetry with an off-axis conformal bump.
  SpacetimeMetric pert = make_sphere_slice();
  const SpacetimeMetric round = make_sphere_slice();
  const double eps = 0.05;
  pert.h_eval = [round, eps](double t, const VecN& x) {
    MatN h = round.h_eval(t, x);
    const double dx = x[0] - 0.4, dy = x[1] - 0.6;
    const double c = 1.0 + eps * std::exp(-(dx * dx + dy * dy));
    h *= c;
    return h;
  };
  pert.dh_eval = [round, eps](double t, const VecN& x) {
    MetricDerivs d = round.dh_eval(t, x);
    const MatN h = round.h_eval(t, x);
    const double dx = x[0] - 0.4, dy = x[1] - 0.6;
    const double e = eps * std::exp(-(dx * dx + dy * dy));
    const double c = 1.0 + e;
    const double gx = -2.0 * dx * e;
    const double gy = -2.0 * dy * e;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        d.dx[0](j, k) = c * d.dx[0](j, k) + gx * h(j, k);
        d.dx[1](j, k) = c * d.dx[1](j, k) + gy * h(j, k);
      }
    return d;
  };

  const VecN base(-0.9, 0.1);
  VecN u(1.0, -0.07);
  const MatN hb = pert.h(0.0, base);
  const double inv = 1.0 / std::sqrt(dot(u, matvec(hb, u)));
  VecN theta(u[0] * inv, u[1] * inv);
  const auto scan = conjugate_scan(pert, 0.0, base, theta, 3.4);
  REQUIRE(scan.records.size() >= 1);
  const auto& rec = scan.records[0];
  CHECK(std::abs(rec.s_star - M_PI) < 0.1);
  CHECK(rec.kernel_dim == 1);
  CHECK(rec.fold);

  // Jacobi determinant against the second-shooting oracle away from the
  // zero: relative agreement at 1e-4.
  for (double s : {1.0, 2.0, 2.8}) {
    VecN v(2);
    for (int i = 0; i < 2; ++i) v[i] = s * theta[i];
    const ExpJacobiResult ej = exp_h_jacobi(pert, 0.0, base, v);
    const MatN fd = oracle::dexp_fd(pert, 0.0, base, v);
    const double dj = det(ej.dexp);
    const double dfd = det(fd);
    CHECK(std::abs(dj - dfd) / std::abs(dfd) < 1e-4);
  }
}

TEST_CASE("scan truncates when the geodesic leaves the chart") {
  const SpacetimeMetric s2 = make_sphere_slice();
  const VecN base(1.0, 0.0);
  const VecN theta(1.0, 0.0);  // outward: exits r < pi before arclength pi
  const auto scan = conjugate_scan(s2, 0.0, base, theta, 3.3);
  CHECK(scan.truncated);
  CHECK(scan.records.empty());
  CHECK(scan.s_reached < 2.3);
}

TEST_CASE("conjugate scan validates the direction normalization") {
  const SpacetimeMetric s2 = make_sphere_slice();
  CHECK_THROWS_AS(conjugate_scan(s2, 0.0, VecN(-1.0, 0.0), VecN(2.0, 0.0), 1.0),
                  invalid_input_error);
}
