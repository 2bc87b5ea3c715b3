#pragma once

#include <vector>

#include "lrtk/bicharacteristic.hpp"
#include "lrtk/metric.hpp"

namespace lrtk {

// Riemannian machinery on a fixed-time slice (N, h(t_slice, .)) of a
// product metric. Conjugate points of the slice metric are exactly the
// conjugate points of the light cone for standard static spacetimes.

struct ExpJacobiResult {
  VecN x;      // exp^h_base(velocity)
  VecN u;      // final velocity
  MatN dexp;   // derivative of exp with respect to the initial velocity
  bool exited = false;
};

// Integrates the geodesic of h(t_slice,.) from `base` with initial velocity
// `velocity` over unit parameter, propagating the variational system for
// d exp alongside. The variational blocks use analytic Christoffel symbols
// with finite-difference position derivatives.
ExpJacobiResult exp_h_jacobi(const SpacetimeMetric& metric, double t_slice,
                             const VecN& base, const VecN& velocity,
                             double step_tol = 1e-12);

// Geodesic endpoint only (no variational blocks).
VecN exp_h(const SpacetimeMetric& metric, double t_slice, const VecN& base,
           const VecN& velocity, double step_tol = 1e-12);

struct ConjugateRecord {
  VecN base;
  VecN theta;           // unit direction at the base
  double s_star = 0.0;  // conjugate parameter
  int kernel_dim = 0;   // dimension of ker d exp at s_star
  bool fold = false;
  double fold_deriv = 0.0;  // directional derivative of det d exp along the kernel
};

struct ConjugateScanOptions {
  double store_ds = 0.0;          // sampling step; 0 = s_max / 512
  double bisect_tol = 1e-8;       // parameter tolerance for the zero
  double kernel_rel_tol = 1e-6;   // singular values below tol * max count as kernel
  double fold_rel_tol = 1e-3;     // relative threshold for the fold derivative
  double step_tol = 1e-12;
};

struct ConjugateScanResult {
  std::vector<ConjugateRecord> records;
  bool truncated = false;  // geodesic left the chart before s_max
  double s_reached = 0.0;
};

// Sweeps s in (0, s_max] along the unit-speed geodesic from (x, theta),
// locating zeros of det d_v exp^h_x(s theta) by sign-change bisection.
ConjugateScanResult conjugate_scan(const SpacetimeMetric& metric, double t_slice,
                                   const VecN& x, const VecN& theta, double s_max,
                                   const ConjugateScanOptions& opt = {});

struct ShootResult {
  double sigma = 0.0;  // |exp^{-1}| of the target
  VecN theta;          // unit direction at the vertex
  double residual = 0.0;
  int iterations = 0;
};

// Solves exp-tilde_{(t,y)}(sigma theta) = x by damped Newton shooting on
// (sigma, theta), where exp-tilde is the spatial projection of the null
// exponential map. Initial guess is the flat-metric chord. Throws
// numerical_error when Newton fails to converge (conjugate point or target
// outside the normal neighborhood).
ShootResult shoot_null(const SpacetimeMetric& metric, const VecN& x, double t,
                       const VecN& y, double tol_newton = 1e-10, int max_iter = 60);

// Convenience wrapper returning only sigma.
double r_function(const SpacetimeMetric& metric, const VecN& x, double t, const VecN& y,
                  double tol_newton = 1e-10);

// Traces the unit-speed geodesic of h(t_slice,.) from (x, theta), sampling
// positions at sigma_j = (j + 1/2) dsigma up to sigma_max. When `dets` is
// non-null it receives det d_v exp at each sample (Jacobi propagation runs
// alongside). Returns false when the chart is exited before sigma_max;
// points sampled up to the exit are kept.
bool trace_geodesic_fan_ray(const SpacetimeMetric& metric, double t_slice, const VecN& x,
                            const VecN& theta, double dsigma, double sigma_max,
                            std::vector<VecN>& points, std::vector<double>* dets,
                            double step_tol = 1e-10);

// Polar-coordinate Jacobian relating sigma^{n-1} dsigma dtheta to the
// h-volume measure at x:
//   J(x, y) = sqrt(det h(y)) / (sqrt(det h(x)) |det d_w exp^h_y(w)|),
// with w = exp^{-1}_y(x). Equals 1 at x = y; throws numerical_error on a
// conjugate pair.
double kernel_jacobian(const SpacetimeMetric& metric, double t, const VecN& x,
                       const VecN& y);

} // namespace lrtk
