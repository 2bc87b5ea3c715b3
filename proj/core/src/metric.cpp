#include "lrtk/metric.hpp"

#include <cmath>
#include <sstream>

#include "lrtk/errors.hpp"

namespace lrtk {

CausalClass classify_covector(const SpacetimeMetric& metric, const PhasePoint& p,
                              double tol_rel) {
  double zeta2 = p.tau * p.tau;
  for (int j = 0; j < metric.n; ++j) zeta2 += p.xi[j] * p.xi[j];
  if (zeta2 == 0.0) throw invalid_input_error("classify_covector: zero covector");
  if (!metric.in_domain(p.t, p.x))
    throw domain_box_error("classify_covector: point outside metric domain box");

  const MatN hinv = metric.h_inv(p.t, p.x);
  const double q = -p.tau * p.tau + dot(p.xi, matvec(hinv, p.xi));

  CausalClass c;
  c.quadratic_form = q;
  const double band = tol_rel * zeta2;
  if (q > band) {
    c.type = CausalType::Spacelike;
    c.orientation = TimeOrientation::None;
  } else {
    c.type = (q < -band) ? CausalType::Timelike : CausalType::Lightlike;
    c.orientation = (p.tau >= 0.0) ? TimeOrientation::Future : TimeOrientation::Past;
  }
  return c;
}

double hamiltonian(const SpacetimeMetric& metric, const PhasePoint& p) {
  if (!metric.in_domain(p.t, p.x))
    throw domain_box_error("hamiltonian: point outside metric domain box");
  const MatN hinv = metric.h_inv(p.t, p.x);
  return 0.5 * (-p.tau * p.tau + dot(p.xi, matvec(hinv, p.xi)));
}

namespace {

VecN full_box(int n, double half) {
  VecN v(n);
  for (int j = 0; j < n; ++j) v[j] = half;
  return v;
}

MetricDerivs zero_derivs(int n) {
  MetricDerivs d;
  d.dt = MatN(n);
  for (int j = 0; j < n; ++j) d.dx[static_cast<size_t>(j)] = MatN(n);
  return d;
}

} // namespace

SpacetimeMetric make_minkowski(int n) {
  if (n < 2) throw invalid_input_error("make_minkowski: n >= 2 required");
  SpacetimeMetric m;
  m.kind = MetricKind::Minkowski;
  m.n = n;
  m.name = "minkowski";
  m.x_lo = full_box(n, -1e30);
  m.x_hi = full_box(n, 1e30);
  m.h_eval = [n](double, const VecN&) { return MatN::identity(n); };
  m.dh_eval = [n](double, const VecN&) { return zero_derivs(n); };
  return m;
}

SpacetimeMetric make_static_bump(int n, double eps, double width) {
  if (n < 2) throw invalid_input_error("make_static_bump: n >= 2 required");
  if (!(width > 0.0)) throw invalid_input_error("make_static_bump: width must be positive");
  SpacetimeMetric m;
  m.kind = MetricKind::StandardStatic;
  m.n = n;
  m.name = "static-bump";
  m.x_lo = full_box(n, 0);
  m.x_hi = full_box(n, 0);
  for (int j = 0; j < n; ++j) {
    m.x_lo[j] = -1e30;
    m.x_hi[j] = 1e30;
  }
  const double iw2 = 1.0 / (width * width);
  m.h_eval = [n, eps, iw2](double, const VecN& x) {
    double r2 = 0.0;
    for (int j = 0; j < n; ++j) r2 += x[j] * x[j];
    const double phi = 1.0 + eps * std::exp(-r2 * iw2);
    MatN h(n);
    for (int j = 0; j < n; ++j) h(j, j) = phi;
    return h;
  };
  m.dh_eval = [n, eps, iw2](double, const VecN& x) {
    double r2 = 0.0;
    for (int j = 0; j < n; ++j) r2 += x[j] * x[j];
    const double e = eps * std::exp(-r2 * iw2);
    MetricDerivs d = zero_derivs(n);
    for (int j = 0; j < n; ++j) {
      const double dphi = -2.0 * x[j] * iw2 * e;
      MatN dj(n);
      for (int k = 0; k < n; ++k) dj(k, k) = dphi;
      d.dx[static_cast<size_t>(j)] = dj;
    }
    return d;
  };
  return m;
}

SpacetimeMetric make_gh_bump(int n, double eps, double width) {
  if (n < 2) throw invalid_input_error("make_gh_bump: n >= 2 required");
  if (!(width > 0.0)) throw invalid_input_error("make_gh_bump: width must be positive");
  SpacetimeMetric m;
  m.kind = MetricKind::GloballyHyperbolic;
  m.n = n;
  m.name = "gh-bump";
  m.x_lo = full_box(n, 0);
  m.x_hi = full_box(n, 0);
  for (int j = 0; j < n; ++j) {
    m.x_lo[j] = -1e30;
    m.x_hi[j] = 1e30;
  }
  const double iw2 = 1.0 / (width * width);
  m.h_eval = [n, eps, iw2](double t, const VecN& x) {
    double r2 = t * t;
    for (int j = 0; j < n; ++j) r2 += x[j] * x[j];
    const double phi = 1.0 + eps * std::exp(-r2 * iw2);
    MatN h(n);
    for (int j = 0; j < n; ++j) h(j, j) = phi;
    return h;
  };
  m.dh_eval = [n, eps, iw2](double t, const VecN& x) {
    double r2 = t * t;
    for (int j = 0; j < n; ++j) r2 += x[j] * x[j];
    const double e = eps * std::exp(-r2 * iw2);
    MetricDerivs d = zero_derivs(n);
    const double dphit = -2.0 * t * iw2 * e;
    for (int k = 0; k < n; ++k) d.dt(k, k) = dphit;
    for (int j = 0; j < n; ++j) {
      const double dphi = -2.0 * x[j] * iw2 * e;
      MatN dj(n);
      for (int k = 0; k < n; ++k) dj(k, k) = dphi;
      d.dx[static_cast<size_t>(j)] = dj;
    }
    return d;
  };
  return m;
}

namespace {

// Radial profile of the round-sphere metric in normal coordinates:
//   h_jk = g(r) delta_jk + (1 - g(r)) x_j x_k / r^2,  g(r) = sin^2(r)/r^2.
// Series branches keep everything smooth through r = 0.
void sphere_profile(double r, double& g, double& dg) {
  if (r < 1e-3) {
    const double r2 = r * r;
    g = 1.0 - r2 / 3.0 + 2.0 * r2 * r2 / 45.0 - r2 * r2 * r2 / 315.0;
    dg = r * (-2.0 / 3.0 + 8.0 * r2 / 45.0 - 6.0 * r2 * r2 / 315.0);
  } else {
    const double s = std::sin(r);
    g = s * s / (r * r);
    dg = (r * std::sin(2.0 * r) - 2.0 * s * s) / (r * r * r);
  }
}

} // namespace

SpacetimeMetric make_sphere_slice() {
  SpacetimeMetric m;
  const int n = 2;
  m.kind = MetricKind::StandardStatic;
  m.n = n;
  m.name = "sphere-slice";
  const double rmax = M_PI - 1e-6;
  m.x_lo = VecN(-rmax, -rmax);
  m.x_hi = VecN(rmax, rmax);
  m.h_eval = [](double, const VecN& x) {
    const double r = norm(x);
    double g, dg;
    sphere_profile(r, g, dg);
    MatN h(2);
    const double u = (r < 1e-8) ? 0.0 : (1.0 - g) / (r * r);
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) h(j, k) = g * (j == k ? 1.0 : 0.0) + u * x[j] * x[k];
    return h;
  };
  m.dh_eval = [](double, const VecN& x) {
    MetricDerivs d = zero_derivs(2);
    const double r = norm(x);
    if (r < 1e-8) return d;  // derivative vanishes at the pole
    double g, dg;
    sphere_profile(r, g, dg);
    const double u = (1.0 - g) / (r * r);
    const double du = -dg / (r * r) - 2.0 * (1.0 - g) / (r * r * r);
    for (int i = 0; i < 2; ++i) {
      MatN di(2);
      const double ri = x[i] / r;
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          double v = dg * ri * (j == k ? 1.0 : 0.0) + du * ri * x[j] * x[k];
          if (j == i) v += u * x[k];
          if (k == i) v += u * x[j];
          di(j, k) = v;
        }
      d.dx[static_cast<size_t>(i)] = di;
    }
    return d;
  };
  return m;
}

SpacetimeMetric make_hyperbolic_like(double c) {
  const int n = 2;
  SpacetimeMetric m;
  m.kind = MetricKind::StandardStatic;
  m.n = n;
  m.name = "hyperbolic-like";
  m.x_lo = VecN(-1e30, -1e30);
  m.x_hi = VecN(1e30, 1e30);
  m.h_eval = [c](double, const VecN& x) {
    const double phi = std::exp(c * (x[0] * x[0] + x[1] * x[1]));
    MatN h(2);
    h(0, 0) = h(1, 1) = phi;
    return h;
  };
  m.dh_eval = [c](double, const VecN& x) {
    MetricDerivs d = zero_derivs(2);
    const double phi = std::exp(c * (x[0] * x[0] + x[1] * x[1]));
    for (int j = 0; j < 2; ++j) {
      MatN dj(2);
      dj(0, 0) = dj(1, 1) = 2.0 * c * x[j] * phi;
      d.dx[static_cast<size_t>(j)] = dj;
    }
    return d;
  };
  return m;
}

SpacetimeMetric make_metric(const std::string& spec, int n) {
  std::string name = spec;
  std::vector<double> params;
  if (auto pos = spec.find(','); pos != std::string::npos) {
    name = spec.substr(0, pos);
    std::stringstream ss(spec.substr(pos + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) params.push_back(std::stod(tok));
  }
  if (name == "minkowski") return make_minkowski(n);
  if (name == "static-bump") {
    const double eps = params.size() > 0 ? params[0] : 0.05;
    const double width = params.size() > 1 ? params[1] : 1.5;
    return make_static_bump(n, eps, width);
  }
  if (name == "gh-bump") {
    const double eps = params.size() > 0 ? params[0] : 0.05;
    const double width = params.size() > 1 ? params[1] : 1.5;
    return make_gh_bump(n, eps, width);
  }
  if (name == "sphere-slice") {
    if (n != 2) throw invalid_input_error("sphere-slice metric requires n=2");
    return make_sphere_slice();
  }
  throw invalid_input_error("unknown metric: " + name);
}

} // namespace lrtk
