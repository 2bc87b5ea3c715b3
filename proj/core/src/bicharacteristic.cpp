#include "lrtk/bicharacteristic.hpp"

#include <algorithm>
#include <cmath>

#include "lrtk/errors.hpp"

namespace lrtk {

namespace {

// State layout: (t, x[0..n), tau, xi[0..n)).
struct FlowState {
  double t;
  VecN x;
  double tau;
  VecN xi;
};

FlowState axpy(const FlowState& a, double c, const FlowState& d) {
  FlowState r = a;
  r.t += c * d.t;
  r.tau += c * d.tau;
  for (int j = 0; j < a.x.n; ++j) {
    r.x[j] += c * d.x[j];
    r.xi[j] += c * d.xi[j];
  }
  return r;
}

// Right-hand side of the flow:
//   t' = tau, x' = h^{-1} xi,
//   tau'  = -(1/2) v^T (d_t h) v,
//   xi_j' = +(1/2) v^T (d_{x_j} h) v,   v = h^{-1} xi.
// This conserves f = (1/2)(-tau^2 + xi^T h^{-1} xi).
FlowState rhs(const SpacetimeMetric& m, const FlowState& u) {
  FlowState d;
  d.x = VecN(m.n);
  d.xi = VecN(m.n);
  const MatN hinv = m.h_inv(u.t, u.x);
  const VecN v = matvec(hinv, u.xi);
  d.t = u.tau;
  d.x = v;
  if (m.kind == MetricKind::Minkowski) {
    d.tau = 0.0;
    return d;
  }
  const MetricDerivs dh = m.dh(u.t, u.x);
  d.tau = -0.5 * dot(v, matvec(dh.dt, v));
  for (int j = 0; j < m.n; ++j) d.xi[j] = 0.5 * dot(v, matvec(dh.dx[static_cast<size_t>(j)], v));
  return d;
}

FlowState rk4_step(const SpacetimeMetric& m, const FlowState& u, double h) {
  const FlowState k1 = rhs(m, u);
  const FlowState k2 = rhs(m, axpy(u, 0.5 * h, k1));
  const FlowState k3 = rhs(m, axpy(u, 0.5 * h, k2));
  const FlowState k4 = rhs(m, axpy(u, h, k3));
  FlowState r = u;
  r.t += (h / 6.0) * (k1.t + 2.0 * k2.t + 2.0 * k3.t + k4.t);
  r.tau += (h / 6.0) * (k1.tau + 2.0 * k2.tau + 2.0 * k3.tau + k4.tau);
  for (int j = 0; j < m.n; ++j) {
    r.x[j] += (h / 6.0) * (k1.x[j] + 2.0 * k2.x[j] + 2.0 * k3.x[j] + k4.x[j]);
    r.xi[j] += (h / 6.0) * (k1.xi[j] + 2.0 * k2.xi[j] + 2.0 * k3.xi[j] + k4.xi[j]);
  }
  return r;
}

double state_dist(const FlowState& a, const FlowState& b) {
  double m = std::abs(a.t - b.t);
  m = std::max(m, std::abs(a.tau - b.tau));
  for (int j = 0; j < a.x.n; ++j) {
    m = std::max(m, std::abs(a.x[j] - b.x[j]));
    m = std::max(m, std::abs(a.xi[j] - b.xi[j]));
  }
  return m;
}

double hamiltonian_of(const SpacetimeMetric& m, const FlowState& u) {
  const MatN hinv = m.h_inv(u.t, u.x);
  return 0.5 * (-u.tau * u.tau + dot(u.xi, matvec(hinv, u.xi)));
}

// Rescale xi so that h^{-1}(xi,xi) = tau^2 exactly (light cone projection).
void project_cone(const SpacetimeMetric& m, FlowState& u) {
  const MatN hinv = m.h_inv(u.t, u.x);
  const double q = dot(u.xi, matvec(hinv, u.xi));
  if (q <= 0.0) return;
  const double scale = std::abs(u.tau) / std::sqrt(q);
  for (int j = 0; j < m.n; ++j) u.xi[j] *= scale;
}

// Advance from s to s_target with adaptive step doubling (RK4 with halved
// step pairs as the error estimate; fifth-order local extrapolation is
// deliberately not used so the fixed-step order stays testable at 4).
FlowState advance(const SpacetimeMetric& m, FlowState u, double s_from, double s_to,
                  const IntegratorOptions& opt, bool* exited) {
  const double dir = (s_to >= s_from) ? 1.0 : -1.0;
  double remaining = std::abs(s_to - s_from);
  if (remaining == 0.0) return u;

  if (!opt.adaptive) {
    const int steps = std::max(1, static_cast<int>(std::ceil(remaining / opt.fixed_ds)));
    const double h = dir * remaining / steps;
    for (int i = 0; i < steps; ++i) {
      u = rk4_step(m, u, h);
      if (!m.in_domain(u.t, u.x)) {
        *exited = true;
        return u;
      }
    }
    return u;
  }

  double h = std::min(remaining, 0.1);
  const double h_min = remaining * 1e-12 + 1e-14;
  while (remaining > 0.0) {
    h = std::min(h, remaining);
    const FlowState full = rk4_step(m, u, dir * h);
    const FlowState half1 = rk4_step(m, u, dir * h * 0.5);
    const FlowState half2 = rk4_step(m, half1, dir * h * 0.5);
    const double err = state_dist(full, half2);
    const double scale_ref = 1.0 + std::abs(u.tau) + norm(u.xi);
    const double tol = opt.step_tol * scale_ref * std::max(h, 1e-3);
    if (err <= tol || h <= h_min * 4.0) {
      u = half2;
      remaining -= h;
      if (!m.in_domain(u.t, u.x)) {
        *exited = true;
        return u;
      }
      if (opt.project_to_cone) project_cone(m, u);
      const double grow = (err > 0.0) ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
      h *= std::clamp(grow, 0.5, 2.0);
    } else {
      h *= std::max(0.1, 0.9 * std::pow(tol / err, 0.25));
      if (h < h_min) throw numerical_error("integrate_bicharacteristic: step underflow");
    }
  }
  return u;
}

} // namespace

PhasePoint Bicharacteristic::eval(double sq) const {
  if (pts.empty()) throw invalid_input_error("bicharacteristic: empty path");
  if (pts.size() == 1) return pts.front();
  const bool increasing = s.back() >= s.front();
  // Clamp to the sampled range, then locate the bracketing interval.
  std::size_t i = 0;
  if (increasing) {
    if (sq <= s.front()) return pts.front();
    if (sq >= s.back()) return pts.back();
    while (i + 2 < s.size() && s[i + 1] < sq) ++i;
  } else {
    if (sq >= s.front()) return pts.front();
    if (sq <= s.back()) return pts.back();
    while (i + 2 < s.size() && s[i + 1] > sq) ++i;
  }
  const double den = s[i + 1] - s[i];
  const double w = (den == 0.0) ? 0.0 : (sq - s[i]) / den;
  const PhasePoint& a = pts[i];
  const PhasePoint& b = pts[i + 1];
  PhasePoint r;
  r.t = a.t + w * (b.t - a.t);
  r.tau = a.tau + w * (b.tau - a.tau);
  r.x = VecN(a.x.n);
  r.xi = VecN(a.x.n);
  for (int j = 0; j < a.x.n; ++j) {
    r.x[j] = a.x[j] + w * (b.x[j] - a.x[j]);
    r.xi[j] = a.xi[j] + w * (b.xi[j] - a.xi[j]);
  }
  return r;
}

Bicharacteristic integrate_bicharacteristic(const SpacetimeMetric& metric,
                                            const PhasePoint& p0, double s0, double s1,
                                            const IntegratorOptions& opt) {
  if (!metric.in_domain(p0.t, p0.x))
    throw domain_box_error("integrate_bicharacteristic: seed outside domain box");
  double zeta2 = p0.tau * p0.tau;
  for (int j = 0; j < metric.n; ++j) zeta2 += p0.xi[j] * p0.xi[j];
  if (zeta2 == 0.0) throw invalid_input_error("integrate_bicharacteristic: zero covector");
  const double f0 = hamiltonian(metric, p0);
  if (std::abs(f0) > opt.hamiltonian_tol * zeta2)
    throw invalid_input_error("integrate_bicharacteristic: seed covector is not light-like");

  // The seed sits at parameter 0; samples cover [lo, hi] monotonically.
  const double lo = std::min(s0, s1);
  const double hi = std::max(s0, s1);

  Bicharacteristic path;
  path.max_drift = std::abs(f0);

  if (lo == hi) {
    FlowState u{p0.t, p0.x, p0.tau, p0.xi};
    if (lo != 0.0) {
      bool exited = false;
      u = advance(metric, u, 0.0, lo, opt, &exited);
      path.exited_domain = exited;
    }
    path.s.push_back(lo);
    path.pts.push_back(PhasePoint{u.t, u.x, u.tau, u.xi});
    path.max_drift = std::max(path.max_drift, std::abs(hamiltonian_of(metric, u)));
    return path;
  }

  double ds = opt.ds_out;
  if (ds <= 0.0) ds = (hi - lo) / 256.0;
  const std::size_t n_out = static_cast<std::size_t>(std::ceil((hi - lo) / ds - 1e-12));
  std::vector<double> nodes(n_out + 1);
  for (std::size_t i = 0; i <= n_out; ++i)
    nodes[i] = (i == n_out) ? hi : lo + ds * static_cast<double>(i);

  const double anchor = std::clamp(0.0, lo, hi);

  // Descending leg: anchor down through the nodes <= anchor.
  std::vector<double> s_down;
  std::vector<PhasePoint> p_down;
  {
    FlowState u{p0.t, p0.x, p0.tau, p0.xi};
    bool exited = false;
    if (anchor != 0.0) u = advance(metric, u, 0.0, anchor, opt, &exited);
    double s_cur = anchor;
    for (std::size_t k = nodes.size(); k-- > 0;) {
      if (exited) {
        path.exited_domain = true;
        break;
      }
      if (nodes[k] > anchor) continue;
      u = advance(metric, u, s_cur, nodes[k], opt, &exited);
      if (exited) {
        path.exited_domain = true;
        break;
      }
      s_cur = nodes[k];
      s_down.push_back(nodes[k]);
      p_down.push_back(PhasePoint{u.t, u.x, u.tau, u.xi});
      path.max_drift = std::max(path.max_drift, std::abs(hamiltonian_of(metric, u)));
    }
  }

  // Ascending leg: anchor up through the nodes > anchor.
  std::vector<double> s_up;
  std::vector<PhasePoint> p_up;
  {
    FlowState u{p0.t, p0.x, p0.tau, p0.xi};
    bool exited = false;
    if (anchor != 0.0) u = advance(metric, u, 0.0, anchor, opt, &exited);
    double s_cur = anchor;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (exited) {
        path.exited_domain = true;
        break;
      }
      if (nodes[k] <= anchor) continue;
      u = advance(metric, u, s_cur, nodes[k], opt, &exited);
      if (exited) {
        path.exited_domain = true;
        break;
      }
      s_cur = nodes[k];
      s_up.push_back(nodes[k]);
      p_up.push_back(PhasePoint{u.t, u.x, u.tau, u.xi});
      path.max_drift = std::max(path.max_drift, std::abs(hamiltonian_of(metric, u)));
    }
  }

  for (std::size_t k = s_down.size(); k-- > 0;) {
    path.s.push_back(s_down[k]);
    path.pts.push_back(p_down[k]);
  }
  for (std::size_t k = 0; k < s_up.size(); ++k) {
    path.s.push_back(s_up[k]);
    path.pts.push_back(p_up[k]);
  }
  if (path.s.empty()) {
    path.s.push_back(anchor);
    path.pts.push_back(p0);
  }
  return path;
}

void seed_null_covector(const SpacetimeMetric& metric, double t, const VecN& x,
                        const VecN& u, VecN& theta_out, VecN& xi_out) {
  const MatN h = metric.h(t, x);
  const double q = dot(u, matvec(h, u));
  if (!(q > 0.0)) throw invalid_input_error("seed_null_covector: degenerate direction");
  const double inv = 1.0 / std::sqrt(q);
  theta_out = VecN(metric.n);
  for (int j = 0; j < metric.n; ++j) theta_out[j] = u[j] * inv;
  xi_out = matvec(h, theta_out);
}

PhasePoint exp_light(const SpacetimeMetric& metric, double t0, const VecN& y,
                     int sign, const VecN& theta, double sigma,
                     const IntegratorOptions& opt) {
  if (sigma < 0.0) throw invalid_input_error("exp_light: sigma must be >= 0");
  VecN theta_n, xi;
  seed_null_covector(metric, t0, y, theta, theta_n, xi);
  PhasePoint p0{t0, y, sign >= 0 ? 1.0 : -1.0, xi};
  if (sigma == 0.0) return p0;
  IntegratorOptions single = opt;
  if (single.ds_out <= 0.0) single.ds_out = sigma;  // endpoint query only
  const Bicharacteristic path = integrate_bicharacteristic(metric, p0, 0.0, sigma, single);
  return path.pts.back();
}

} // namespace lrtk
