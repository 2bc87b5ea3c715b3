#pragma once

#include <vector>

#include "lrtk/metric.hpp"

namespace lrtk {

// A sampled bicharacteristic of the Hamiltonian
//   f = (1/2)(-tau^2 + h^{-1}(t,x)(xi,xi)),
// flowed so that a covector index (tau, xi) = (1, theta_flat) with
// |theta|_h = 1 moves future-forward along (t, x) = (t0 + s, geodesic).
// For time-dependent h this couples (tau, xi) to the base point exactly as
// the cotangent flow does; f is a conserved quantity of the integration.
struct Bicharacteristic {
  std::vector<double> s;        // monotone parameter samples
  std::vector<PhasePoint> pts;  // phase points gamma(s_i)
  int interp_order = 1;         // linear between stored samples
  double max_drift = 0.0;       // max_i |f(gamma(s_i))|
  bool exited_domain = false;   // trajectory left the metric domain box

  PhasePoint eval(double sq) const;  // linear interpolation in s
};

struct IntegratorOptions {
  double step_tol = 1e-12;       // local error control target (per unit step)
  double ds_out = 0.0;           // output sample spacing; 0 = auto
  bool project_to_cone = true;   // rescale xi each step so f = 0 exactly
  bool adaptive = true;          // false = fixed-step classic RK4
  double fixed_ds = 1e-3;        // step when adaptive = false
  double hamiltonian_tol = 1e-9; // precondition band for |f(p0)|
};

// Integrates the flow from p0 over s in [s_range0, s_range1] (s_range1 may
// be less than s_range0; samples are still emitted in traversal order).
// Throws invalid_input_error when p0 is not light-like within tolerance and
// numerical_error on step underflow. Domain exit truncates the path and
// sets exited_domain.
Bicharacteristic integrate_bicharacteristic(const SpacetimeMetric& metric,
                                            const PhasePoint& p0, double s0, double s1,
                                            const IntegratorOptions& opt = {});

// Null exponential map: follow the light-like geodesic from (t0, y) with
// initial direction (sign, theta), theta unit with respect to h(t0, y),
// for parameter sigma >= 0. Returns the endpoint (t, x).
// For standard static metrics the time component is exactly t0 + sign*sigma.
PhasePoint exp_light(const SpacetimeMetric& metric, double t0, const VecN& y,
                     int sign, const VecN& theta, double sigma,
                     const IntegratorOptions& opt = {});

// Normalizes a Euclidean direction u to unit h-norm at (t, x) and returns
// the associated covector xi = h theta (so that h^{-1} xi = theta).
void seed_null_covector(const SpacetimeMetric& metric, double t, const VecN& x,
                        const VecN& u, VecN& theta_out, VecN& xi_out);

} // namespace lrtk
