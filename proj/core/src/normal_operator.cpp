#include "lrtk/normal_operator.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <mutex>

#include "lrtk/errors.hpp"
#include "lrtk/geodesic.hpp"
#include "lrtk/parallel.hpp"
#include "lrtk/quadrature.hpp"
#include "lrtk/spectral.hpp"

namespace lrtk {

double cone_multiplier_constant(int n) {
  if (n < 2) throw invalid_input_error("cone_multiplier_constant: n >= 2 required");
  // |S^{n-2}| = 2 pi^{(n-1)/2} / Gamma((n-1)/2); the familiar cases are
  // |S^0| = 2 and |S^1| = 2 pi.
  const double m = static_cast<double>(n - 1);
  const double area = 2.0 * std::pow(M_PI, 0.5 * m) / std::tgamma(0.5 * m);
  return 2.0 * M_PI * area;
}

double multiplier_k_radial(int n, double tau, double r, double eps_cone) {
  if (r == 0.0 && tau == 0.0)
    throw invalid_input_error("multiplier_k: zero covector");
  if (r <= 0.0) return 0.0;  // pure time-like axis
  double dist = r - std::abs(tau);  // signed cone distance in tau at fixed xi
  if (dist < 0.0) return 0.0;       // time-like support vanishes exactly
  if (dist == 0.0) {
    if (eps_cone <= 0.0)
      throw invalid_input_error("multiplier_k: on-cone input requires eps_cone regularization");
    dist = eps_cone;
  } else if (dist < eps_cone) {
    dist = eps_cone;
  }
  const double s = dist * (r + std::abs(tau));  // |xi|^2 - tau^2, regularized
  const double a = 0.5 * (n - 3);
  return cone_multiplier_constant(n) * std::pow(s, a) / std::pow(r, n - 2);
}

double multiplier_k(int n, double tau, const double* xi, double eps_cone) {
  double r2 = 0.0;
  for (int j = 0; j < n; ++j) r2 += xi[j] * xi[j];
  return multiplier_k_radial(n, tau, std::sqrt(r2), eps_cone);
}

double low_frequency_cutoff(double xi_norm, double rho) {
  if (rho <= 0.0) return 1.0;
  if (xi_norm >= rho) return 1.0;
  if (xi_norm <= 0.5 * rho) return 0.0;
  const double u = (xi_norm - 0.5 * rho) / (0.5 * rho);
  return u * u * (3.0 - 2.0 * u);
}

std::vector<std::size_t> default_pad(const GridGeometry& g) {
  return g.dims;
}

void validate_padding(const GridField& f, const std::vector<std::size_t>& pad_cells) {
  const int d = f.geom.axes();
  if (pad_cells.size() != static_cast<std::size_t>(d))
    throw invalid_input_error("padding: one pad count per axis required");
  double lo[4], hi[4];
  f.support_box(lo, hi);
  const double time_window_radius = 0.5 * (hi[0] - lo[0]);
  for (int a = 0; a < d; ++a) {
    const double pad_len =
        static_cast<double>(pad_cells[static_cast<size_t>(a)]) * f.geom.spacing[static_cast<size_t>(a)];
    if (pad_len + 1e-12 < time_window_radius)
      throw invalid_input_error(
          "padding: physical pad shorter than the support time-window radius "
          "(cone kernel would wrap)");
  }
}

void resolve_frequency_cutoffs(double eps_in, double rho_in, const SpectralField& sf,
                               double& eps_out, double& rho_out) {
  eps_out = eps_in;
  rho_out = rho_in;
  if (eps_out < 0.0) eps_out = 2.0 * sf.bin_width(0);
  if (rho_out < 0.0) {
    double b = 0.0;
    for (int a = 1; a < sf.padded_geom.axes(); ++a) b = std::max(b, sf.bin_width(a));
    rho_out = 2.0 * b;
  }
}

namespace {

// Cell-averaged multiplier across the tau-cell [tau - dtau/2, tau + dtau/2]
// at fixed |xi| = r: the integral of the cone singularity is analytic.
double k_cell_average(int n, double tau, double r, double dtau) {
  const double a = tau - 0.5 * dtau;
  const double b = tau + 0.5 * dtau;
  const double lo = std::max(a, -r);
  const double hi = std::min(b, r);
  if (hi <= lo) return 0.0;
  const double cn = cone_multiplier_constant(n);
  if (n == 2) {
    // int (r^2 - tau^2)^{-1/2} dtau = asin(tau / r)
    return cn * (std::asin(hi / r) - std::asin(lo / r)) / dtau;
  }
  if (n == 3) {
    return cn / r * (hi - lo) / dtau;
  }
  // Higher n: the symbol is continuous across the cone; midpoint suffices.
  const double mid = 0.5 * (lo + hi);
  return multiplier_k_radial(n, mid, r, 0.0) * (hi - lo) / dtau;
}

} // namespace

GridField apply_multiplier(const GridField& f, const MultiplierSymbol& m,
                           const std::vector<std::size_t>& pad_cells) {
  if (f.geom.spatial_dim() != m.n)
    throw invalid_input_error("apply_multiplier: field dimension does not match symbol");
  validate_padding(f, pad_cells);

  SpectralField sf = fft_forward(f, pad_cells);
  double eps, rho;
  resolve_frequency_cutoffs(m.eps_cone, m.rho, sf, eps, rho);
  const int n = m.n;

  apply_spectral_symbol(sf, [n, eps, rho](const double* zeta, const double* binw, int axes) {
    const double tau = zeta[0];
    double r2 = 0.0;
    for (int a = 1; a < axes; ++a) r2 += zeta[a] * zeta[a];
    const double r = std::sqrt(r2);
    if (r == 0.0) return 0.0;
    const double lc = low_frequency_cutoff(r, rho);
    if (lc == 0.0) return 0.0;
    double v;
    if (std::abs(r - std::abs(tau)) <= eps + 0.5 * binw[0]) {
      v = k_cell_average(n, tau, r, binw[0]);
    } else {
      v = multiplier_k_radial(n, tau, r, 0.0);
    }
    return v * lc;
  });

  GridField padded = fft_inverse(sf);
  return crop_to(padded, f.geom);
}

GridField apply_custom_multiplier(
    const GridField& f,
    const std::function<double(double, const double*, int)>& symbol,
    const std::vector<std::size_t>& pad_cells) {
  validate_padding(f, pad_cells);
  SpectralField sf = fft_forward(f, pad_cells);
  apply_spectral_symbol(sf, [&symbol](const double* zeta, const double*, int axes) {
    return symbol(zeta[0], zeta + 1, axes - 1);
  });
  return crop_to(fft_inverse(sf), f.geom);
}

std::complex<double> a_profile(int n, double sigma, double r, AProfileMode mode,
                               int quadrature_order) {
  if (n < 2) throw invalid_input_error("a_profile: n >= 2 required");
  if (!(r > 0.0)) throw invalid_input_error("a_profile: r > 0 required");
  const double cn = cone_multiplier_constant(n);

  if (mode == AProfileMode::ClosedN3) {
    if (n != 3) throw invalid_input_error("a_profile: closed form requires n = 3");
    if (sigma == 0.0) return {2.0 * cn, 0.0};  // removable singularity
    const double w = 2.0 * sigma * r;
    const std::complex<double> i(0.0, 1.0);
    return cn * (1.0 - std::exp(-i * w)) / (i * sigma * r);
  }

  // Cache Gauss-Jacobi rules keyed by (order, n); the weight exponents
  // depend only on n.
  static std::mutex cache_mutex;
  static std::map<std::pair<int, int>, QuadratureRule> cache;
  QuadratureRule rule;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto key = std::make_pair(quadrature_order, n);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const double a = 0.5 * (n - 3);
      it = cache.emplace(key, gauss_jacobi01(quadrature_order, a, a)).first;
    }
    rule = it->second;
  }

  std::complex<double> acc(0.0, 0.0);
  const double w = 2.0 * sigma * r;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double phase = -w * rule.nodes[i];
    acc += rule.weights[i] * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return std::pow(2.0, n - 2) * cn * acc;
}

namespace {

// Time-mollified copy of f: convolution along the t axis with a normalized
// hat of width delta_w.
GridField time_mollify(const GridField& f, double delta_w) {
  const double dt = f.geom.spacing[0];
  const int reach = std::max(1, static_cast<int>(std::ceil(delta_w / dt - 1e-12)) - 0);
  std::vector<double> w(static_cast<size_t>(2 * reach + 1));
  double sum = 0.0;
  for (int j = -reach; j <= reach; ++j) {
    const double v = std::max(0.0, 1.0 - std::abs(j * dt) / delta_w);
    w[static_cast<size_t>(j + reach)] = v;
    sum += v;
  }
  for (double& v : w) v /= sum;

  GridField out(f.geom);
  out.support_margin = f.support_margin;
  const std::size_t nt = f.geom.dims[0];
  std::size_t spatial = 1;
  for (int a = 1; a < f.geom.axes(); ++a) spatial *= f.geom.dims[static_cast<size_t>(a)];
  for (std::size_t it = 0; it < nt; ++it) {
    for (int j = -reach; j <= reach; ++j) {
      const long long src = static_cast<long long>(it) + j;
      if (src < 0 || src >= static_cast<long long>(nt)) continue;
      const double wj = w[static_cast<size_t>(j + reach)];
      const double* in_row = f.values.data() + static_cast<std::size_t>(src) * spatial;
      double* out_row = out.values.data() + it * spatial;
      for (std::size_t s = 0; s < spatial; ++s) out_row[s] += wj * in_row[s];
    }
  }
  return out;
}

struct SupportScan {
  std::vector<std::size_t> lo, hi;  // inclusive index ranges per axis
  bool empty = true;
};

SupportScan scan_support(const GridField& f) {
  const int d = f.geom.axes();
  SupportScan s;
  s.lo.assign(static_cast<size_t>(d), 0);
  s.hi.assign(static_cast<size_t>(d), 0);
  std::size_t idx[4];
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    if (f.values[flat] == 0.0) continue;
    unflatten(f.geom, flat, idx);
    if (s.empty) {
      for (int a = 0; a < d; ++a) s.lo[static_cast<size_t>(a)] = s.hi[static_cast<size_t>(a)] = idx[a];
      s.empty = false;
    } else {
      for (int a = 0; a < d; ++a) {
        s.lo[static_cast<size_t>(a)] = std::min(s.lo[static_cast<size_t>(a)], idx[a]);
        s.hi[static_cast<size_t>(a)] = std::max(s.hi[static_cast<size_t>(a)], idx[a]);
      }
    }
  }
  return s;
}

double ball_equivalent_radius(const GridGeometry& g) {
  const int n = g.spatial_dim();
  double cellvol = 1.0;
  for (int a = 1; a <= n; ++a) cellvol *= g.spacing[static_cast<size_t>(a)];
  if (n == 2) return std::sqrt(cellvol / M_PI);
  return std::cbrt(cellvol * 3.0 / (4.0 * M_PI));
}

double sphere_area(int n) {
  // |S^{n-1}|: 2 pi for n = 2, 4 pi for n = 3.
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

GridField kernel_apply_flat(const SpacetimeMetric& metric, const GridField& f,
                            const KernelApplyOptions& opt) {
  const int n = metric.n;
  const GridGeometry& g = f.geom;
  const double dt = g.spacing[0];
  const double delta_w = (opt.delta_width > 0.0) ? opt.delta_width : 2.0 * dt;
  if (delta_w < dt)
    throw invalid_input_error("kernel_apply_static: delta_width must be >= dt");
  const GridField ft = time_mollify(f, delta_w);

  const SupportScan sup = scan_support(f);
  GridField out(g);
  if (sup.empty) return out;

  const std::size_t nt = g.dims[0];
  std::size_t spatial_total = 1;
  for (int a = 1; a <= n; ++a) spatial_total *= g.dims[static_cast<size_t>(a)];

  // Global radial reach from the time support window.
  const double t_sup_lo = g.coord(0, sup.lo[0]);
  const double t_sup_hi = g.coord(0, sup.hi[0]);
  const double t_out_lo = g.origin[0];
  const double t_out_hi = g.coord(0, nt - 1);
  const double sigma_max =
      std::max(t_sup_hi - t_out_lo, t_out_hi - t_sup_lo) + delta_w;

  // Flattened list of support points (spatial flat index, coordinates).
  std::vector<std::size_t> sup_pts;
  std::vector<double> sup_xyz;
  {
    std::vector<std::size_t> sidx(static_cast<size_t>(n));
    std::vector<std::size_t> ranges(static_cast<size_t>(n));
    std::size_t count = 1;
    for (int a = 0; a < n; ++a) {
      ranges[static_cast<size_t>(a)] =
          sup.hi[static_cast<size_t>(a) + 1] - sup.lo[static_cast<size_t>(a) + 1] + 1;
      count *= ranges[static_cast<size_t>(a)];
    }
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t rem = c;
      for (int a = n - 1; a >= 0; --a) {
        sidx[static_cast<size_t>(a)] =
            sup.lo[static_cast<size_t>(a) + 1] + rem % ranges[static_cast<size_t>(a)];
        rem /= ranges[static_cast<size_t>(a)];
      }
      std::size_t sflat = 0;
      for (int a = 0; a < n; ++a)
        sflat = sflat * g.dims[static_cast<size_t>(a) + 1] + sidx[static_cast<size_t>(a)];
      sup_pts.push_back(sflat);
      for (int a = 0; a < n; ++a)
        sup_xyz.push_back(g.coord(a + 1, sidx[static_cast<size_t>(a)]));
    }
  }

  double spatial_cellvol = 1.0;
  for (int a = 1; a <= n; ++a) spatial_cellvol *= g.spacing[static_cast<size_t>(a)];
  const double r_in = ball_equivalent_radius(g);
  const double area = sphere_area(n);
  const int stride = std::max(1, opt.output_stride);

  // Enumerate strided output spatial points.
  std::vector<std::size_t> out_pts;
  {
    std::vector<std::size_t> oidx(static_cast<size_t>(n), 0);
    bool done = false;
    while (!done) {
      std::size_t oflat = 0;
      for (int a = 0; a < n; ++a)
        oflat = oflat * g.dims[static_cast<size_t>(a) + 1] + oidx[static_cast<size_t>(a)];
      out_pts.push_back(oflat);
      int a = n - 1;
      while (a >= 0) {
        oidx[static_cast<size_t>(a)] += static_cast<std::size_t>(stride);
        if (oidx[static_cast<size_t>(a)] < g.dims[static_cast<size_t>(a) + 1]) break;
        oidx[static_cast<size_t>(a)] = 0;
        --a;
      }
      done = (a < 0);
    }
  }

  // t-interpolated read of the mollified field at a fixed spatial index.
  auto ft_at = [&](double t, std::size_t sflat) -> double {
    const double u = (t - g.origin[0]) / dt;
    if (u < 0.0 || u > static_cast<double>(nt - 1)) return 0.0;
    const double fl = std::floor(u);
    std::size_t i0 = static_cast<std::size_t>(fl);
    if (i0 >= nt - 1) i0 = nt - 2;
    const double w1 = u - static_cast<double>(i0);
    const double* base = ft.values.data();
    return (1.0 - w1) * base[i0 * spatial_total + sflat] +
           w1 * base[(i0 + 1) * spatial_total + sflat];
  };

  parallel_for(out_pts.size(), opt.threads, [&](std::size_t plo, std::size_t phi) {
    std::vector<double> pair_d;
    std::vector<double> pair_w;
    std::vector<std::size_t> pair_idx;
    std::vector<std::size_t> yidx(static_cast<size_t>(n));
    for (std::size_t p = plo; p < phi; ++p) {
      const std::size_t yflat = out_pts[p];
      std::size_t rem = yflat;
      for (int a = n - 1; a >= 0; --a) {
        yidx[static_cast<size_t>(a)] = rem % g.dims[static_cast<size_t>(a) + 1];
        rem /= g.dims[static_cast<size_t>(a) + 1];
      }
      double y[3];
      for (int a = 0; a < n; ++a) y[a] = g.coord(a + 1, yidx[static_cast<size_t>(a)]);

      // Cache distances/weights for this output column.
      pair_d.clear();
      pair_w.clear();
      pair_idx.clear();
      for (std::size_t q = 0; q < sup_pts.size(); ++q) {
        double d2 = 0.0;
        for (int a = 0; a < n; ++a) {
          const double dd = sup_xyz[q * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] - y[a];
          d2 += dd * dd;
        }
        const double d = std::sqrt(d2);
        if (d < r_in || d > sigma_max) continue;
        pair_d.push_back(d);
        pair_w.push_back(spatial_cellvol / std::pow(d, n - 1));
        pair_idx.push_back(sup_pts[q]);
      }

      for (std::size_t it = 0; it < nt; ++it) {
        const double t = g.coord(0, it);
        double acc = 0.0;
        for (std::size_t q = 0; q < pair_d.size(); ++q) {
          const double d = pair_d[q];
          acc += pair_w[q] * (ft_at(t + d, pair_idx[q]) + ft_at(t - d, pair_idx[q]));
        }
        // Innermost shell: exact polar integration of the 1/d^{n-1} cell,
        // two-point Gauss-Legendre in the radius.
        {
          const double g1 = 0.5 * r_in * (1.0 - 1.0 / std::sqrt(3.0));
          const double g2 = 0.5 * r_in * (1.0 + 1.0 / std::sqrt(3.0));
          const double v1 = ft_at(t + g1, yflat) + ft_at(t - g1, yflat);
          const double v2 = ft_at(t + g2, yflat) + ft_at(t - g2, yflat);
          acc += area * 0.5 * r_in * (v1 + v2);
        }
        out.values[it * spatial_total + yflat] = acc;
      }
    }
  });
  return out;
}

GridField kernel_apply_curved(const SpacetimeMetric& metric, const GridField& f,
                              const KernelApplyOptions& opt) {
  const int n = metric.n;
  if (n != 2)
    throw unsupported_error("kernel_apply_static: curved slices supported for n = 2");
  const GridGeometry& g = f.geom;
  const double dt = g.spacing[0];
  const double delta_w = (opt.delta_width > 0.0) ? opt.delta_width : 2.0 * dt;
  if (delta_w < dt)
    throw invalid_input_error("kernel_apply_static: delta_width must be >= dt");
  const GridField ft = time_mollify(f, delta_w);

  const SupportScan sup = scan_support(f);
  GridField out(g);
  if (sup.empty) return out;

  const std::size_t nt = g.dims[0];
  std::size_t spatial_total = 1;
  for (int a = 1; a <= n; ++a) spatial_total *= g.dims[static_cast<size_t>(a)];

  const double t_sup_lo = g.coord(0, sup.lo[0]);
  const double t_sup_hi = g.coord(0, sup.hi[0]);
  const double t_out_lo = g.origin[0];
  const double t_out_hi = g.coord(0, nt - 1);
  const double sigma_max =
      std::max(t_sup_hi - t_out_lo, t_out_hi - t_sup_lo) + delta_w;

  const double dsig = (opt.sigma_sample > 0.0)
                          ? opt.sigma_sample
                          : 0.5 * std::min(g.spacing[1], g.spacing[2]);
  int m = opt.fan_directions;
  if (m <= 0) m = 96;
  const int stride = std::max(1, opt.output_stride);

  std::vector<std::size_t> out_pts;
  for (std::size_t i1 = 0; i1 < g.dims[1]; i1 += static_cast<std::size_t>(stride))
    for (std::size_t i2 = 0; i2 < g.dims[2]; i2 += static_cast<std::size_t>(stride))
      out_pts.push_back(i1 * g.dims[2] + i2);

  parallel_for(out_pts.size(), opt.threads, [&](std::size_t plo, std::size_t phi) {
    std::vector<VecN> pts;
    std::vector<double> dets;
    std::vector<double> point(static_cast<size_t>(n) + 1);
    for (std::size_t p = plo; p < phi; ++p) {
      const std::size_t yflat = out_pts[p];
      VecN y(n);
      y[0] = g.coord(1, yflat / g.dims[2]);
      y[1] = g.coord(2, yflat % g.dims[2]);

      const MatN hy = metric.h(0.0, y);
      const double sdh = std::sqrt(det(hy));

      // Per-direction fan: t-independent, reused across the whole column.
      std::vector<std::vector<VecN>> fan(static_cast<size_t>(m));
      std::vector<double> wfan(static_cast<size_t>(m));
      for (int k = 0; k < m; ++k) {
        const double phik = 2.0 * M_PI * k / m;
        VecN u(std::cos(phik), std::sin(phik));
        const double rho2 = dot(u, matvec(hy, u));
        VecN theta(n);
        const double inv = 1.0 / std::sqrt(rho2);
        for (int a = 0; a < n; ++a) theta[a] = u[a] * inv;
        // h-sphere measure: sqrt(det h) / |u|_h^n per Euclidean angle.
        wfan[static_cast<size_t>(k)] =
            sdh / std::pow(rho2, 0.5 * n) * (2.0 * M_PI / m);
        const bool ok = trace_geodesic_fan_ray(metric, 0.0, y, theta, dsig, sigma_max,
                                               fan[static_cast<size_t>(k)],
                                               opt.check_conjugates ? &dets : nullptr,
                                               1e-10);
        (void)ok;  // chart exit truncates the fan ray; partial sums stand
        if (opt.check_conjugates) {
          for (double dv : dets)
            if (dv <= 0.0)
              throw numerical_error(
                  "kernel_apply_static: conjugate pair encountered along the fan");
        }
      }

      for (std::size_t it = 0; it < nt; ++it) {
        const double t = g.coord(0, it);
        double acc = 0.0;
        for (int k = 0; k < m; ++k) {
          const auto& ray = fan[static_cast<size_t>(k)];
          const double w = wfan[static_cast<size_t>(k)] * dsig;
          for (std::size_t j = 0; j < ray.size(); ++j) {
            const double sg = (static_cast<double>(j) + 0.5) * dsig;
            point[1] = ray[j][0];
            point[2] = ray[j][1];
            point[0] = t + sg;
            double v = ft.sample(point.data());
            point[0] = t - sg;
            v += ft.sample(point.data());
            acc += w * v;
          }
        }
        out.values[it * spatial_total + yflat] = acc;
      }
    }
  });
  return out;
}

} // namespace

GridField kernel_apply_static(const SpacetimeMetric& metric, const GridField& f,
                              const KernelApplyOptions& opt) {
  if (metric.kind == MetricKind::GloballyHyperbolic)
    throw unsupported_error("kernel_apply_static: requires a standard static metric");
  if (f.geom.spatial_dim() != metric.n)
    throw invalid_input_error("kernel_apply_static: grid dimension mismatch");
  if (metric.kind == MetricKind::Minkowski) return kernel_apply_flat(metric, f, opt);
  return kernel_apply_curved(metric, f, opt);
}

namespace {

double rel_l2_strided(const GridField& a, const GridField& b, std::size_t margin,
                      int stride) {
  const int d = a.geom.axes();
  std::size_t idx[4];
  double na = 0.0, nb = 0.0, nd2 = 0.0;
  for (std::size_t flat = 0; flat < a.size(); ++flat) {
    unflatten(a.geom, flat, idx);
    bool use = true;
    for (int ax = 0; ax < d; ++ax) {
      if (idx[ax] < margin || idx[ax] + margin >= a.geom.dims[static_cast<size_t>(ax)]) {
        use = false;
        break;
      }
      if (ax > 0 && idx[ax] % static_cast<std::size_t>(stride) != 0) {
        use = false;
        break;
      }
    }
    if (!use) continue;
    na += a.values[flat] * a.values[flat];
    nb += b.values[flat] * b.values[flat];
    nd2 += (a.values[flat] - b.values[flat]) * (a.values[flat] - b.values[flat]);
  }
  const double ref = std::sqrt(std::max(na, nb));
  return (ref == 0.0) ? 0.0 : std::sqrt(nd2) / ref;
}

} // namespace

CrossValidationReport cross_validate(const SpacetimeMetric& metric, const GridField& f,
                                     const std::vector<Realization>& realizations,
                                     const RayFamily* rays,
                                     const CrossValidateOptions& opt) {
  std::vector<Realization> applicable;
  for (Realization r : realizations) {
    switch (r) {
      case Realization::Multiplier:
        if (metric.kind == MetricKind::Minkowski) applicable.push_back(r);
        break;
      case Realization::Kernel:
        if (metric.kind != MetricKind::GloballyHyperbolic) applicable.push_back(r);
        break;
      case Realization::Compose:
        if (rays != nullptr) applicable.push_back(r);
        break;
    }
  }
  if (applicable.size() < 2)
    throw invalid_input_error("cross_validate: need at least two applicable realizations");

  CrossValidationReport rep;
  rep.kernel_stride = std::max(1, opt.kernel.output_stride);
  rep.interior_margin = opt.interior_margin;

  std::vector<GridField> fields;
  std::vector<bool> strided;
  for (Realization r : applicable) {
    const auto start = std::chrono::steady_clock::now();
    switch (r) {
      case Realization::Multiplier: {
        MultiplierSymbol m = opt.multiplier;
        m.n = metric.n;
        fields.push_back(apply_multiplier(f, m, default_pad(f.geom)));
        // Record the resolved cutoffs for the report.
        SpectralField probe;
        probe.padded_geom = f.geom;
        for (std::size_t a = 0; a < probe.padded_geom.dims.size(); ++a)
          probe.padded_geom.dims[a] *= 2;
        resolve_frequency_cutoffs(m.eps_cone, m.rho, probe, rep.eps_cone, rep.rho);
        rep.names.push_back("multiplier");
        strided.push_back(false);
        break;
      }
      case Realization::Kernel: {
        KernelApplyOptions ko = opt.kernel;
        ko.threads = std::max(ko.threads, opt.threads);
        fields.push_back(kernel_apply_static(metric, f, ko));
        rep.names.push_back("kernel");
        strided.push_back(rep.kernel_stride > 1);
        break;
      }
      case Realization::Compose: {
        ForwardOptions fo;
        fo.threads = opt.threads;
        fields.push_back(normal_compose_upsampled(metric, f, *rays, opt.compose_upsample,
                                                  AdjointMode::Discrete, fo));
        rep.names.push_back("compose");
        strided.push_back(false);
        break;
      }
    }
    const auto stop = std::chrono::steady_clock::now();
    rep.runtime_seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }

  // Dyadic band centers for the per-band reports.
  rep.band_centers =
      opt.band_centers.empty() ? auto_dyadic_bands(f.geom, 4) : opt.band_centers;

  for (std::size_t i = 0; i < fields.size(); ++i)
    for (std::size_t j = i + 1; j < fields.size(); ++j) {
      CrossValidationReport::Pair pr;
      pr.a = rep.names[i];
      pr.b = rep.names[j];
      if (strided[i] || strided[j]) {
        pr.rel_l2 = rel_l2_strided(fields[i], fields[j], opt.interior_margin,
                                   rep.kernel_stride);
      } else {
        pr.rel_l2 = rel_l2_interior(fields[i], fields[j], opt.interior_margin);
        const GridField diff = fields[i] - fields[j];
        const auto eb_d = band_energies(diff, rep.band_centers);
        const auto eb_a = band_energies(fields[i], rep.band_centers);
        const auto eb_b = band_energies(fields[j], rep.band_centers);
        for (std::size_t b = 0; b < rep.band_centers.size(); ++b) {
          const double ref = std::sqrt(std::max(eb_a[b], eb_b[b]));
          pr.band_rel.push_back(ref > 0.0 ? std::sqrt(eb_d[b]) / ref : 0.0);
        }
      }
      rep.pairs.push_back(pr);
    }

  // Measured normalization between the composition and multiplier routes.
  int icomp = -1, imult = -1;
  for (std::size_t i = 0; i < rep.names.size(); ++i) {
    if (rep.names[i] == "compose") icomp = static_cast<int>(i);
    if (rep.names[i] == "multiplier") imult = static_cast<int>(i);
  }
  if (icomp >= 0 && imult >= 0) {
    const double a = fields[static_cast<size_t>(icomp)].dot(f);
    const double b = fields[static_cast<size_t>(imult)].dot(f);
    rep.measured_constant_ratio = (b != 0.0) ? a / b : 0.0;
  }
  return rep;
}

} // namespace lrtk
