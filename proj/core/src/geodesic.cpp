#include "lrtk/geodesic.hpp"

#include <algorithm>
#include <cmath>

#include "lrtk/errors.hpp"

namespace lrtk {

namespace {

// Christoffel symbols of h(t_slice, .) from the analytic first derivatives:
//   Gamma^k_ij = (1/2) h^{kl} (d_i h_lj + d_j h_li - d_l h_ij).
void christoffel(const SpacetimeMetric& m, double t, const VecN& x,
                 MatN gamma[kMaxDim]) {
  const int n = m.n;
  const MatN hinv = m.h_inv(t, x);
  const MetricDerivs dh = m.dh(t, x);
  for (int k = 0; k < n; ++k) gamma[k] = MatN(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      VecN lower(n);
      for (int l = 0; l < n; ++l)
        lower[l] = 0.5 * (dh.dx[static_cast<size_t>(i)](l, j) +
                          dh.dx[static_cast<size_t>(j)](l, i) -
                          dh.dx[static_cast<size_t>(l)](i, j));
      const VecN up = matvec(hinv, lower);
      for (int k = 0; k < n; ++k) {
        gamma[k](i, j) = up[k];
        gamma[k](j, i) = up[k];
      }
    }
}

// Geodesic acceleration G^k(x,u) = Gamma^k_ij u^i u^j and its u-derivative.
void accel(const SpacetimeMetric& m, double t, const VecN& x, const VecN& u,
           VecN& g, MatN& dg_du) {
  MatN gamma[kMaxDim];
  christoffel(m, t, x, gamma);
  const int n = m.n;
  g = VecN(n);
  dg_du = MatN(n);
  for (int k = 0; k < n; ++k) {
    const VecN gu = matvec(gamma[k], u);
    g[k] = dot(u, gu);
    for (int j = 0; j < n; ++j) dg_du(k, j) = 2.0 * gu[j];
  }
}

VecN accel_only(const SpacetimeMetric& m, double t, const VecN& x, const VecN& u) {
  MatN gamma[kMaxDim];
  christoffel(m, t, x, gamma);
  VecN g(m.n);
  for (int k = 0; k < m.n; ++k) g[k] = dot(u, matvec(gamma[k], u));
  return g;
}

// Extended state for the variational flow: geodesic (x, u) plus the
// derivative blocks M = dx/du0 and D = du/du0.
struct VarState {
  VecN x, u;
  MatN M, D;
};

VarState var_axpy(const VarState& a, double c, const VarState& d) {
  VarState r = a;
  const int n = a.x.n;
  for (int j = 0; j < n; ++j) {
    r.x[j] += c * d.x[j];
    r.u[j] += c * d.u[j];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      r.M(i, j) += c * d.M(i, j);
      r.D(i, j) += c * d.D(i, j);
    }
  return r;
}

// d/ds (x, u, M, D) = (u, -G, D, -dG/dx M - dG/du D). The position
// derivative of G is taken by central differences of the analytic G.
VarState var_rhs(const SpacetimeMetric& m, double t, const VarState& s) {
  const int n = m.n;
  VarState d;
  d.x = s.u;
  d.u = VecN(n);
  d.M = s.D;
  d.D = MatN(n);

  VecN g;
  MatN dg_du;
  accel(m, t, s.x, s.u, g, dg_du);
  for (int j = 0; j < n; ++j) d.u[j] = -g[j];

  // dG/dx by central differences; the scale follows the local geometry.
  MatN dg_dx(n);
  const double eps = 1e-6;
  for (int j = 0; j < n; ++j) {
    VecN xp = s.x, xm = s.x;
    xp[j] += eps;
    xm[j] -= eps;
    const VecN gp = accel_only(m, t, xp, s.u);
    const VecN gm = accel_only(m, t, xm, s.u);
    for (int k = 0; k < n; ++k) dg_dx(k, j) = (gp[k] - gm[k]) / (2.0 * eps);
  }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += dg_dx(i, k) * s.M(k, j) + dg_du(i, k) * s.D(k, j);
      d.D(i, j) = -acc;
    }
  return d;
}

VarState var_rk4(const SpacetimeMetric& m, double t, const VarState& s, double h) {
  const VarState k1 = var_rhs(m, t, s);
  const VarState k2 = var_rhs(m, t, var_axpy(s, 0.5 * h, k1));
  const VarState k3 = var_rhs(m, t, var_axpy(s, 0.5 * h, k2));
  const VarState k4 = var_rhs(m, t, var_axpy(s, h, k3));
  VarState r = var_axpy(s, h / 6.0, k1);
  r = var_axpy(r, h / 3.0, k2);
  r = var_axpy(r, h / 3.0, k3);
  r = var_axpy(r, h / 6.0, k4);
  return r;
}

double var_dist(const VarState& a, const VarState& b) {
  double m = 0.0;
  for (int j = 0; j < a.x.n; ++j) {
    m = std::max(m, std::abs(a.x[j] - b.x[j]));
    m = std::max(m, std::abs(a.u[j] - b.u[j]));
  }
  return m;
}

bool slice_in_domain(const SpacetimeMetric& m, const VecN& x) {
  for (int j = 0; j < m.n; ++j)
    if (x[j] < m.x_lo[j] || x[j] > m.x_hi[j]) return false;
  return true;
}

// Adaptive advance of the variational state; returns false when the
// geodesic leaves the chart.
bool var_advance(const SpacetimeMetric& m, double t, VarState& s, double s_from,
                 double s_to, double tol) {
  double remaining = s_to - s_from;
  if (remaining <= 0.0) return true;
  double h = std::min(remaining, 0.05);
  const double h_min = 1e-12;
  while (remaining > 0.0) {
    h = std::min(h, remaining);
    const VarState full = var_rk4(m, t, s, h);
    const VarState h1 = var_rk4(m, t, s, 0.5 * h);
    const VarState h2 = var_rk4(m, t, h1, 0.5 * h);
    const double err = var_dist(full, h2);
    const double tol_step = tol * (1.0 + norm(s.u)) * std::max(h, 1e-3);
    if (err <= tol_step || h <= 4.0 * h_min) {
      s = h2;
      remaining -= h;
      if (!slice_in_domain(m, s.x)) return false;
      const double grow = (err > 0.0) ? 0.9 * std::pow(tol_step / err, 0.2) : 2.0;
      h *= std::clamp(grow, 0.5, 2.0);
    } else {
      h *= std::max(0.1, 0.9 * std::pow(tol_step / err, 0.25));
      if (h < h_min) throw numerical_error("exp_h_jacobi: step underflow");
    }
  }
  return true;
}

VarState var_init(int n, const VecN& x, const VecN& u) {
  VarState s;
  s.x = x;
  s.u = u;
  s.M = MatN(n);
  s.D = MatN::identity(n);
  return s;
}

} // namespace

ExpJacobiResult exp_h_jacobi(const SpacetimeMetric& metric, double t_slice,
                             const VecN& base, const VecN& velocity, double step_tol) {
  VarState s = var_init(metric.n, base, velocity);
  ExpJacobiResult r;
  r.exited = !var_advance(metric, t_slice, s, 0.0, 1.0, step_tol);
  r.x = s.x;
  r.u = s.u;
  r.dexp = s.M;
  return r;
}

VecN exp_h(const SpacetimeMetric& metric, double t_slice, const VecN& base,
           const VecN& velocity, double step_tol) {
  // Reuses the variational engine; the matrix blocks are cheap at n <= 3.
  return exp_h_jacobi(metric, t_slice, base, velocity, step_tol).x;
}

ConjugateScanResult conjugate_scan(const SpacetimeMetric& metric, double t_slice,
                                   const VecN& x, const VecN& theta, double s_max,
                                   const ConjugateScanOptions& opt) {
  const int n = metric.n;
  {
    const MatN h = metric.h(t_slice, x);
    const double q = dot(theta, matvec(h, theta));
    if (std::abs(q - 1.0) > 1e-8)
      throw invalid_input_error("conjugate_scan: direction must be h-unit");
  }

  ConjugateScanResult result;
  const double ds = (opt.store_ds > 0.0) ? opt.store_ds : s_max / 512.0;

  // March along the unit-speed geodesic storing states; det(M(s)) has a
  // zero of order n at s = 0, so tracking starts after the first step.
  VarState s = var_init(n, x, theta);
  double s_cur = 0.0;
  double det_prev = 0.0;
  VarState state_prev = s;
  bool have_prev = false;

  while (s_cur < s_max - 1e-15) {
    const double s_next = std::min(s_cur + ds, s_max);
    VarState trial = s;
    if (!var_advance(metric, t_slice, trial, s_cur, s_next, opt.step_tol)) {
      result.truncated = true;
      result.s_reached = s_cur;
      return result;
    }
    const double det_next = det(trial.M);
    if (have_prev && (det_prev == 0.0 || det_prev * det_next < 0.0 ||
                      (det_next == 0.0 && s_next > ds))) {
      // Bracketed a zero: bisection restarting from the stored state.
      double lo = s_cur, hi = s_next;
      double f_lo = det_prev;
      VarState st_lo = s;
      while (hi - lo > opt.bisect_tol) {
        const double mid = 0.5 * (lo + hi);
        VarState st_mid = st_lo;
        if (!var_advance(metric, t_slice, st_mid, lo, mid, opt.step_tol)) break;
        const double f_mid = det(st_mid.M);
        if (f_lo * f_mid <= 0.0 && f_mid != 0.0) {
          hi = mid;
        } else {
          lo = mid;
          st_lo = st_mid;
          f_lo = f_mid;
        }
      }
      const double s_star = 0.5 * (lo + hi);
      VarState st_star = st_lo;
      var_advance(metric, t_slice, st_star, lo, s_star, opt.step_tol);

      ConjugateRecord rec;
      rec.base = x;
      rec.theta = theta;
      rec.s_star = s_star;

      // d_v exp at v = s* theta equals M(s*)/s*.
      MatN dexp = st_star.M;
      dexp *= 1.0 / s_star;
      VecN sv;
      MatN vmat;
      singular_values(dexp, sv, vmat);
      const double sv_max = sv[0];
      int kdim = 0;
      for (int i = 0; i < n; ++i)
        if (sv[i] < opt.kernel_rel_tol * sv_max) ++kdim;
      if (kdim == 0) kdim = 1;  // the located zero itself
      rec.kernel_dim = kdim;

      if (kdim == 1) {
        // Fold test: derivative of det d_v exp along the kernel direction,
        // by second shooting at v = s* theta +/- eps k.
        VecN kdir(n);
        for (int i = 0; i < n; ++i) kdir[i] = vmat(i, n - 1);
        const double eps = 1e-4 * s_star;
        VecN vp(n), vm(n);
        for (int i = 0; i < n; ++i) {
          vp[i] = s_star * theta[i] + eps * kdir[i];
          vm[i] = s_star * theta[i] - eps * kdir[i];
        }
        const ExpJacobiResult ep = exp_h_jacobi(metric, t_slice, x, vp, opt.step_tol);
        const ExpJacobiResult em = exp_h_jacobi(metric, t_slice, x, vm, opt.step_tol);
        if (!ep.exited && !em.exited) {
          rec.fold_deriv = (det(ep.dexp) - det(em.dexp)) / (2.0 * eps);
          // Scale: product of the nonsmall singular values, per unit length.
          double scale = 1.0;
          for (int i = 0; i + 1 < n; ++i) scale *= sv[i];
          scale = std::max(scale / std::max(s_star, 1.0), 1e-300);
          rec.fold = std::abs(rec.fold_deriv) > opt.fold_rel_tol * scale;
        }
      }
      result.records.push_back(rec);
    }
    s = trial;
    det_prev = det_next;
    state_prev = trial;
    have_prev = true;
    s_cur = s_next;
  }
  result.s_reached = s_cur;
  (void)state_prev;
  return result;
}

bool trace_geodesic_fan_ray(const SpacetimeMetric& metric, double t_slice, const VecN& x,
                            const VecN& theta, double dsigma, double sigma_max,
                            std::vector<VecN>& points, std::vector<double>* dets,
                            double step_tol) {
  points.clear();
  if (dets) dets->clear();
  VarState s = var_init(metric.n, x, theta);
  double s_cur = 0.0;
  const std::size_t count = static_cast<std::size_t>(std::floor(sigma_max / dsigma));
  for (std::size_t j = 0; j < count; ++j) {
    const double target = (static_cast<double>(j) + 0.5) * dsigma;
    if (!var_advance(metric, t_slice, s, s_cur, target, step_tol)) return false;
    s_cur = target;
    points.push_back(s.x);
    if (dets) dets->push_back(det(s.M) / std::pow(target, metric.n));
  }
  return true;
}

namespace {

// Orthonormal (Euclidean) complement of a direction, used as the local
// chart for Newton updates of the shooting direction.
void complement_basis(const VecN& dir, VecN perp[2], int n) {
  VecN d = dir;
  const double nn = norm(d);
  for (int i = 0; i < n; ++i) d[i] /= nn;
  int smallest = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(d[i]) < std::abs(d[smallest])) smallest = i;
  VecN e(n);
  e[smallest] = 1.0;
  const double p = dot(e, d);
  VecN v1(n);
  for (int i = 0; i < n; ++i) v1[i] = e[i] - p * d[i];
  const double n1 = norm(v1);
  for (int i = 0; i < n; ++i) v1[i] /= n1;
  perp[0] = v1;
  if (n == 3) {
    VecN v2(3);
    v2[0] = d[1] * v1[2] - d[2] * v1[1];
    v2[1] = d[2] * v1[0] - d[0] * v1[2];
    v2[2] = d[0] * v1[1] - d[1] * v1[0];
    perp[1] = v2;
  }
}

} // namespace

ShootResult shoot_null(const SpacetimeMetric& metric, const VecN& x, double t,
                       const VecN& y, double tol_newton, int max_iter) {
  const int n = metric.n;
  VecN chord(n);
  for (int i = 0; i < n; ++i) chord[i] = x[i] - y[i];
  const double chord_len = norm(chord);

  if (metric.kind == MetricKind::Minkowski) {
    ShootResult r;
    r.sigma = chord_len;
    r.theta = VecN(n);
    if (chord_len > 0.0)
      for (int i = 0; i < n; ++i) r.theta[i] = chord[i] / chord_len;
    else
      r.theta[0] = 1.0;
    return r;
  }

  if (chord_len == 0.0) {
    ShootResult r;
    r.sigma = 0.0;
    r.theta = VecN(n);
    r.theta[0] = 1.0;
    return r;
  }

  // Unknowns: sigma and (n-1) angle offsets in the complement chart of the
  // current direction; residual is the spatial miss of the null exponential.
  IntegratorOptions iopt;
  iopt.step_tol = 1e-12;

  VecN dir = chord;
  const MatN h0 = metric.h(t, y);
  double sigma = std::sqrt(dot(chord, matvec(h0, chord)));

  auto spatial = [&](double sg, const VecN& d) {
    return exp_light(metric, t, y, +1, d, sg, iopt).x;
  };

  double last_res = 1e300;
  ShootResult out;
  for (int it = 0; it < max_iter; ++it) {
    VecN theta_n, xi;
    seed_null_covector(metric, t, y, dir, theta_n, xi);
    const VecN fx = spatial(sigma, theta_n);
    VecN res(n);
    for (int i = 0; i < n; ++i) res[i] = fx[i] - x[i];
    const double rnorm = norm(res);
    out.sigma = sigma;
    out.theta = theta_n;
    out.residual = rnorm;
    out.iterations = it;
    if (rnorm <= tol_newton * (1.0 + chord_len)) return out;

    VecN perp[2];
    complement_basis(theta_n, perp, n);

    // Finite-difference Jacobian in (sigma, angles).
    MatN jac(n);
    const double ds = 1e-6 * (1.0 + sigma);
    const VecN f_ds = spatial(sigma + ds, theta_n);
    for (int i = 0; i < n; ++i) jac(i, 0) = (f_ds[i] - fx[i]) / ds;
    const double da = 1e-6;
    for (int a = 0; a < n - 1; ++a) {
      VecN d2 = theta_n;
      for (int i = 0; i < n; ++i) d2[i] += da * perp[a][i];
      VecN th2, xi2;
      seed_null_covector(metric, t, y, d2, th2, xi2);
      const VecN f2 = spatial(sigma, th2);
      for (int i = 0; i < n; ++i) jac(i, a + 1) = (f2[i] - fx[i]) / da;
    }

    VecN step;
    try {
      step = matvec(inverse(jac), res);
    } catch (const numerical_error&) {
      throw numerical_error("shoot_null: singular shooting Jacobian (conjugate point?)");
    }

    // Damped update: halve until the residual decreases.
    double lambda = 1.0;
    bool accepted = false;
    for (int back = 0; back < 12; ++back) {
      const double sig_try = sigma - lambda * step[0];
      if (sig_try > 0.0) {
        VecN d_try = theta_n;
        for (int a = 0; a < n - 1; ++a)
          for (int i = 0; i < n; ++i) d_try[i] -= lambda * step[a + 1] * perp[a][i];
        VecN th_try, xi_try;
        seed_null_covector(metric, t, y, d_try, th_try, xi_try);
        const VecN f_try = spatial(sig_try, th_try);
        double r_try = 0.0;
        for (int i = 0; i < n; ++i) r_try += (f_try[i] - x[i]) * (f_try[i] - x[i]);
        r_try = std::sqrt(r_try);
        if (r_try < rnorm) {
          sigma = sig_try;
          dir = d_try;
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      if (rnorm <= 1e3 * tol_newton * (1.0 + chord_len)) return out;
      throw numerical_error("shoot_null: no descent step (conjugate point or outside neighborhood)");
    }
    last_res = rnorm;
  }
  (void)last_res;
  throw numerical_error("shoot_null: Newton did not converge");
}

double r_function(const SpacetimeMetric& metric, const VecN& x, double t, const VecN& y,
                  double tol_newton) {
  if (metric.n >= 1) {
    bool same = true;
    for (int i = 0; i < metric.n; ++i)
      if (x[i] != y[i]) same = false;
    if (same) return 0.0;
  }
  return shoot_null(metric, x, t, y, tol_newton).sigma;
}

double kernel_jacobian(const SpacetimeMetric& metric, double t, const VecN& x,
                       const VecN& y) {
  const int n = metric.n;
  if (metric.kind == MetricKind::Minkowski) return 1.0;

  bool same = true;
  for (int i = 0; i < n; ++i)
    if (x[i] != y[i]) same = false;
  if (same) return 1.0;

  const ShootResult shot = shoot_null(metric, x, t, y);
  VecN w(n);
  for (int i = 0; i < n; ++i) w[i] = shot.sigma * shot.theta[i];
  const ExpJacobiResult ej = exp_h_jacobi(metric, t, y, w);
  const double d = std::abs(det(ej.dexp));
  if (d < 1e-10)
    throw numerical_error("kernel_jacobian: singular jacobian (conjugate pair)");
  const double dh_y = det(metric.h(t, y));
  const double dh_x = det(metric.h(t, x));
  return std::sqrt(dh_y / dh_x) / d;
}

} // namespace lrtk
