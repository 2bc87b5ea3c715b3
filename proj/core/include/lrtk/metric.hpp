#pragma once

#include <functional>
#include <string>

#include "lrtk/smallmat.hpp"

namespace lrtk {

enum class MetricKind { Minkowski, StandardStatic, GloballyHyperbolic };

// First derivatives of the spatial metric h(t,x): dt is d_t h, dx[j] is
// d_{x^j} h.
struct MetricDerivs {
  MatN dt;
  std::array<MatN, kMaxDim> dx;
};

// Product Lorentzian metric -dt^2 + h(t,x,dx) supplied as evaluator
// callbacks over a declared coordinate box. All experiments are
// single-chart, so there is no atlas machinery.
struct SpacetimeMetric {
  MetricKind kind = MetricKind::Minkowski;
  int n = 2;  // spatial dimension, >= 2
  std::function<MatN(double t, const VecN& x)> h_eval;
  std::function<MetricDerivs(double t, const VecN& x)> dh_eval;
  // Domain box: [t_lo, t_hi] x prod_j [x_lo[j], x_hi[j]].
  double t_lo = -1e30, t_hi = 1e30;
  VecN x_lo, x_hi;
  std::string name = "minkowski";

  bool in_domain(double t, const VecN& x) const {
    if (t < t_lo || t > t_hi) return false;
    for (int j = 0; j < n; ++j)
      if (x[j] < x_lo[j] || x[j] > x_hi[j]) return false;
    return true;
  }

  MatN h(double t, const VecN& x) const { return h_eval(t, x); }
  MatN h_inv(double t, const VecN& x) const { return inverse(h_eval(t, x)); }
  MetricDerivs dh(double t, const VecN& x) const { return dh_eval(t, x); }
};

// A point of phase space: base (t, x) with covector (tau, xi).
struct PhasePoint {
  double t = 0.0;
  VecN x;
  double tau = 0.0;
  VecN xi;
};

enum class CausalType { Spacelike, Timelike, Lightlike };
enum class TimeOrientation { None, Future, Past };

struct CausalClass {
  CausalType type = CausalType::Spacelike;
  TimeOrientation orientation = TimeOrientation::None;
  double quadratic_form = 0.0;  // g(zeta, zeta) = -tau^2 + h^{-1}(xi, xi)
};

// Classification of a covector by the sign of g(zeta,zeta), with a
// relative tolerance band around the light cone. Orientation for
// non-spacelike classes follows sign(tau).
CausalClass classify_covector(const SpacetimeMetric& metric, const PhasePoint& p,
                              double tol_rel = 1e-12);

// Hamiltonian generating the null geodesic flow:
//   f(t, x, tau, xi) = (1/2) (-tau^2 + h^{-1}(t,x)(xi, xi)).
double hamiltonian(const SpacetimeMetric& metric, const PhasePoint& p);

// Named built-in metrics.
SpacetimeMetric make_minkowski(int n);
// Conformally flat time-independent bump: h = (1 + eps exp(-|x|^2/w^2)) delta.
SpacetimeMetric make_static_bump(int n, double eps, double width);
// The same bump also decaying in time (a genuinely time-dependent product
// metric): h = (1 + eps exp(-(|x|^2 + t^2)/w^2)) delta.
SpacetimeMetric make_gh_bump(int n, double eps, double width);
// Round unit 2-sphere in geodesic normal coordinates at a pole; valid for
// |x| < pi. n = 2 only.
SpacetimeMetric make_sphere_slice();
// Conformal factor exp(2 phi) with convex phi = c |x|^2 / 2 gives a slice
// of strictly negative curvature (n = 2).
SpacetimeMetric make_hyperbolic_like(double c);

// Parse "name" or "name,p1,p2" into a built-in metric.
SpacetimeMetric make_metric(const std::string& spec, int n);

} // namespace lrtk
