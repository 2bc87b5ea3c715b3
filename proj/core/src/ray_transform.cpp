#include "lrtk/ray_transform.hpp"

#include <algorithm>
#include <cmath>

#include "lrtk/errors.hpp"
#include "lrtk/parallel.hpp"
#include "lrtk/spectral.hpp"

namespace lrtk {

namespace {

std::vector<double> trapezoid_weights(const std::vector<std::size_t>& dims,
                                      const std::vector<double>& spacing) {
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  std::vector<double> w(total, 1.0);
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rem = f;
    for (int a = static_cast<int>(dims.size()) - 1; a >= 0; --a) {
      idx[static_cast<size_t>(a)] = rem % dims[static_cast<size_t>(a)];
      rem /= dims[static_cast<size_t>(a)];
    }
    double v = 1.0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      const bool edge = (idx[a] == 0 || idx[a] + 1 == dims[a]);
      v *= spacing[a] * (edge ? 0.5 : 1.0);
    }
    w[f] = v;
  }
  return w;
}

std::vector<VecN> circle_directions(int m) {
  std::vector<VecN> dirs;
  dirs.reserve(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    const double phi = 2.0 * M_PI * k / m;
    dirs.emplace_back(std::cos(phi), std::sin(phi));
  }
  return dirs;
}

std::vector<VecN> fibonacci_sphere(int m) {
  std::vector<VecN> dirs;
  dirs.reserve(static_cast<size_t>(m));
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < m; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / m;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * k;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

// Direction-measure factor at a base point: the h-unit-sphere measure
// element relative to the Euclidean one, sqrt(det h) / |u|_h^n.
double sphere_measure_factor(const SpacetimeMetric& m, const VecN& z, const VecN& u) {
  const MatN h = m.h(0.0, z);
  const double rho2 = dot(u, matvec(h, u));
  const double dh = det(h);
  return std::sqrt(dh) / std::pow(rho2, 0.5 * m.n);
}

} // namespace

std::size_t RayFamily::num_s_samples() const {
  if (degenerate || ds <= 0.0) return 1;
  return static_cast<std::size_t>(std::floor((s_max - s_min) / ds + 0.5)) + 1;
}

VecN RayFamily::base_point(std::size_t iz) const {
  VecN z(n);
  std::size_t rem = iz;
  for (int a = n - 1; a >= 0; --a) {
    const std::size_t d = z_dims[static_cast<size_t>(a)];
    z[a] = z_origin[static_cast<size_t>(a)] +
           z_spacing[static_cast<size_t>(a)] * static_cast<double>(rem % d);
    rem /= d;
  }
  return z;
}

RayFamily build_ray_family(const SpacetimeMetric& metric, const RayFamilySpec& spec) {
  if (spec.direction_count < 2)
    throw invalid_input_error("build_ray_family: need at least 2 directions");
  if (spec.z_dims.size() != static_cast<std::size_t>(metric.n))
    throw invalid_input_error("build_ray_family: base grid dimension mismatch");
  if (spec.s_max < spec.s_min)
    throw invalid_input_error("build_ray_family: empty s-range");

  RayFamily fam;
  fam.n = metric.n;
  fam.z_origin = spec.z_origin;
  fam.z_spacing = spec.z_spacing;
  fam.z_dims = spec.z_dims;
  fam.z_weights = trapezoid_weights(spec.z_dims, spec.z_spacing);
  fam.s_min = spec.s_min;
  fam.s_max = spec.s_max;
  fam.degenerate = (spec.s_max == spec.s_min);
  fam.ds = spec.ds;
  if (fam.ds <= 0.0) {
    double mn = 1e300;
    for (double s : spec.z_spacing) mn = std::min(mn, s);
    fam.ds = 0.5 * mn;
  }
  if (metric.n == 2) {
    fam.dirs = circle_directions(spec.direction_count);
    fam.dir_weight = 2.0 * M_PI / spec.direction_count;
  } else if (metric.n == 3) {
    fam.dirs = fibonacci_sphere(spec.direction_count);
    fam.dir_weight = 4.0 * M_PI / spec.direction_count;
  } else {
    throw unsupported_error("build_ray_family: n must be 2 or 3");
  }
  fam.normalized_by_metric = (metric.kind != MetricKind::Minkowski);

  // Base points must lie inside the metric chart.
  for (std::size_t iz = 0; iz < fam.num_bases(); ++iz) {
    const VecN z = fam.base_point(iz);
    if (!metric.in_domain(0.0, z))
      throw domain_box_error("build_ray_family: base grid leaves metric domain");
  }
  return fam;
}

double ray_weight(const SpacetimeMetric& metric, const RayFamily& fam, std::size_t iz,
                  std::size_t k) {
  const double wz = fam.z_weights[iz];
  if (!fam.normalized_by_metric) return wz * fam.dir_weight;
  const VecN z = fam.base_point(iz);
  const MatN h = metric.h(0.0, z);
  const double dh = det(h);
  // dVol_{h0}(z) factor times the h-sphere measure factor.
  return wz * std::sqrt(dh) * sphere_measure_factor(metric, z, fam.dirs[k]) *
         fam.dir_weight;
}

namespace {

struct SupportBox {
  double lo[4], hi[4];
};

SupportBox support_of(const GridField& f) {
  SupportBox b;
  f.support_box(b.lo, b.hi);
  return b;
}

// True when the forward trace may stop: the remaining s-interval cannot
// meet the support box in time (t = s along our rays up to curvature in x;
// the time coordinate is monotone with unit rate, which bounds reach).
bool support_cleared(const SupportBox& sup, double t_cur, double s_remaining_sign) {
  if (s_remaining_sign > 0.0) return t_cur > sup.hi[0];
  return t_cur < sup.lo[0];
}

// Slab test of the straight ray (s, z + s theta) against the support box;
// rays that provably miss the claimed support integrate to zero.
bool straight_ray_hits_box(const SupportBox& sup, const VecN& z, const VecN& theta,
                           double s_min, double s_max) {
  double lo = std::max(s_min, sup.lo[0]);
  double hi = std::min(s_max, sup.hi[0]);
  for (int a = 0; a < z.n; ++a) {
    const double za = z[a], ta = theta[a];
    if (ta == 0.0) {
      if (za < sup.lo[a + 1] || za > sup.hi[a + 1]) return false;
      continue;
    }
    double s0 = (sup.lo[a + 1] - za) / ta;
    double s1 = (sup.hi[a + 1] - za) / ta;
    if (s0 > s1) std::swap(s0, s1);
    lo = std::max(lo, s0);
    hi = std::min(hi, s1);
    if (lo > hi) return false;
  }
  return lo <= hi;
}

} // namespace

RayData forward(const SpacetimeMetric& metric, const GridField& f, const RayFamily& rays,
                const ForwardOptions& opt) {
  if (f.geom.spatial_dim() != metric.n)
    throw invalid_input_error("forward: grid dimension does not match metric");
  const std::size_t nb = rays.num_bases();
  const std::size_t nd = rays.dirs.size();
  RayData out;
  out.num_bases = nb;
  out.num_dirs = nd;
  out.values.assign(nb * nd, 0.0);
  out.truncated.assign(nb * nd, 0);

  const std::size_t ns = rays.num_s_samples();
  const SupportBox sup = support_of(f);
  const bool minkowski = (metric.kind == MetricKind::Minkowski);

  parallel_for(nb, opt.threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> point(static_cast<size_t>(metric.n) + 1);
    for (std::size_t iz = lo; iz < hi; ++iz) {
      const VecN z = rays.base_point(iz);
      for (std::size_t k = 0; k < nd; ++k) {
        double acc = 0.0;
        bool trunc = false;
        if (rays.degenerate) {
          out.values[iz * nd + k] = 0.0;
          continue;
        }
        if (minkowski) {
          const VecN& th = rays.dirs[k];
          if (!straight_ray_hits_box(sup, z, th, rays.s_min, rays.s_max)) {
            out.values[iz * nd + k] = 0.0;
            continue;
          }
          for (std::size_t j = 0; j < ns; ++j) {
            const double s = rays.s_min + rays.ds * static_cast<double>(j);
            const double ws = (j == 0 || j + 1 == ns) ? 0.5 * rays.ds : rays.ds;
            point[0] = s;
            for (int a = 0; a < metric.n; ++a)
              point[static_cast<size_t>(a) + 1] = z[a] + s * th[a];
            acc += ws * f.sample(point.data());
          }
        } else {
          VecN theta, xi;
          seed_null_covector(metric, 0.0, z, rays.dirs[k], theta, xi);
          PhasePoint p0{0.0, z, 1.0, xi};
          IntegratorOptions iopt;
          iopt.step_tol = opt.step_tol;
          iopt.ds_out = rays.ds;
          if (opt.fast_trace) {
            iopt.adaptive = false;
            iopt.fixed_ds = 0.5 * rays.ds;
          }
          Bicharacteristic path =
              integrate_bicharacteristic(metric, p0, rays.s_min, rays.s_max, iopt);
          for (std::size_t j = 0; j < path.s.size(); ++j) {
            const bool endpoint = (j == 0 || j + 1 == path.s.size());
            const double ws = endpoint ? 0.5 * rays.ds : rays.ds;
            point[0] = path.pts[j].t;
            for (int a = 0; a < metric.n; ++a)
              point[static_cast<size_t>(a) + 1] = path.pts[j].x[a];
            acc += ws * f.sample(point.data());
          }
          if (path.exited_domain) {
            if (path.s.front() > rays.s_min &&
                !support_cleared(sup, path.pts.front().t, -1.0))
              trunc = true;
            if (path.s.back() < rays.s_max &&
                !support_cleared(sup, path.pts.back().t, 1.0))
              trunc = true;
          }
        }
        out.values[iz * nd + k] = acc;
        out.truncated[iz * nd + k] = trunc ? 1 : 0;
      }
    }
  });
  return out;
}

std::vector<double> grid_measure(const SpacetimeMetric& metric, const GridGeometry& g) {
  if (metric.kind == MetricKind::Minkowski) return {};
  std::vector<double> nu(g.size());
  std::size_t idx[4];
  VecN x(metric.n);
  for (std::size_t fidx = 0; fidx < g.size(); ++fidx) {
    unflatten(g, fidx, idx);
    const double t = g.coord(0, idx[0]);
    for (int a = 0; a < metric.n; ++a)
      x[a] = g.coord(a + 1, idx[static_cast<size_t>(a) + 1]);
    nu[fidx] = std::sqrt(det(metric.h(t, x))) * g.cell_volume();
  }
  return nu;
}

double ray_inner(const SpacetimeMetric& metric, const RayFamily& fam, const RayData& a,
                 const RayData& b) {
  if (a.size() != b.size() || a.size() != fam.num_rays())
    throw invalid_input_error("ray_inner: shape mismatch");
  double s = 0.0;
  const std::size_t nd = fam.dirs.size();
  for (std::size_t iz = 0; iz < fam.num_bases(); ++iz)
    for (std::size_t k = 0; k < nd; ++k)
      s += ray_weight(metric, fam, iz, k) * a.at(iz, k) * b.at(iz, k);
  return s;
}

double grid_inner(const SpacetimeMetric& metric, const GridField& a, const GridField& b) {
  if (!a.geom.same_shape(b.geom)) throw invalid_input_error("grid_inner: shape mismatch");
  const std::vector<double> nu = grid_measure(metric, a.geom);
  if (nu.empty()) return a.dot(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += nu[i] * a.values[i] * b.values[i];
  return s;
}

double sample_ray_data(const RayData& u, const RayFamily& fam, const double* z,
                       std::size_t dir_index) {
  const int n = fam.n;
  std::size_t base[3];
  double frac[3];
  for (int a = 0; a < n; ++a) {
    const double v = (z[a] - fam.z_origin[static_cast<size_t>(a)]) / fam.z_spacing[static_cast<size_t>(a)];
    if (v < 0.0 || v > static_cast<double>(fam.z_dims[static_cast<size_t>(a)] - 1)) return 0.0;
    double fl = std::floor(v);
    std::size_t i0 = static_cast<std::size_t>(fl);
    if (i0 >= fam.z_dims[static_cast<size_t>(a)] - 1) {
      i0 = fam.z_dims[static_cast<size_t>(a)] - 2;
      fl = static_cast<double>(i0);
    }
    base[a] = i0;
    frac[a] = v - fl;
  }
  double acc = 0.0;
  const int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int a = 0; a < n; ++a) {
      const int hi = (c >> a) & 1;
      w *= hi ? frac[a] : (1.0 - frac[a]);
      flat = flat * fam.z_dims[static_cast<size_t>(a)] + (base[a] + static_cast<std::size_t>(hi));
    }
    acc += w * u.values[flat * u.num_dirs + dir_index];
  }
  return acc;
}

double sample_ray_data_angle(const RayData& u, const RayFamily& fam, const double* z,
                             double phi) {
  const std::size_t m = fam.dirs.size();
  const double dphi = 2.0 * M_PI / static_cast<double>(m);
  double p = phi / dphi;
  p -= std::floor(p / static_cast<double>(m)) * static_cast<double>(m);
  const std::size_t k0 = static_cast<std::size_t>(std::floor(p)) % m;
  const std::size_t k1 = (k0 + 1) % m;
  const double w1 = p - std::floor(p);
  return (1.0 - w1) * sample_ray_data(u, fam, z, k0) + w1 * sample_ray_data(u, fam, z, k1);
}

namespace {

// Scatter the transpose of one ray's interpolation row into `raw`.
void scatter_ray(const GridGeometry& g, double coeff,
                 const double* point, std::vector<double>& raw) {
  const int d = g.axes();
  std::size_t base[4];
  double frac[4];
  for (int a = 0; a < d; ++a) {
    const double u = (point[a] - g.origin[static_cast<size_t>(a)]) / g.spacing[static_cast<size_t>(a)];
    if (u < 0.0 || u > static_cast<double>(g.dims[static_cast<size_t>(a)] - 1)) return;
    double fl = std::floor(u);
    std::size_t i0 = static_cast<std::size_t>(fl);
    if (i0 >= g.dims[static_cast<size_t>(a)] - 1) {
      i0 = g.dims[static_cast<size_t>(a)] - 2;
      fl = static_cast<double>(i0);
    }
    base[a] = i0;
    frac[a] = u - fl;
  }
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
      const int hi = (c >> a) & 1;
      w *= hi ? frac[a] : (1.0 - frac[a]);
      flat = flat * g.dims[static_cast<size_t>(a)] + (base[a] + static_cast<std::size_t>(hi));
    }
    raw[flat] += coeff * w;
  }
}

GridField adjoint_discrete(const SpacetimeMetric& metric, const RayData& u,
                           const RayFamily& rays, const GridGeometry& out_geom,
                           const ForwardOptions& opt) {
  const std::size_t nb = rays.num_bases();
  const std::size_t nd = rays.dirs.size();
  const std::size_t ns = rays.num_s_samples();
  const bool minkowski = (metric.kind == MetricKind::Minkowski);

  const int threads = std::max(1, opt.threads);
  std::vector<std::vector<double>> partial(static_cast<size_t>(threads));

  // Deterministic reduction: fixed block partition, fixed merge order.
  const std::size_t chunk = (nb + threads - 1) / static_cast<std::size_t>(threads);
  parallel_for(static_cast<std::size_t>(threads), threads, [&](std::size_t wlo, std::size_t whi) {
    for (std::size_t w = wlo; w < whi; ++w) {
      auto& raw = partial[w];
      raw.assign(out_geom.size(), 0.0);
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(nb, lo + chunk);
      std::vector<double> point(static_cast<size_t>(metric.n) + 1);
      for (std::size_t iz = lo; iz < hi; ++iz) {
        const VecN z = rays.base_point(iz);
        for (std::size_t k = 0; k < nd; ++k) {
          const double uval = u.at(iz, k);
          if (uval == 0.0 || rays.degenerate) continue;
          const double wr = ray_weight(metric, rays, iz, k);
          if (minkowski) {
            const VecN& th = rays.dirs[k];
            for (std::size_t j = 0; j < ns; ++j) {
              const double s = rays.s_min + rays.ds * static_cast<double>(j);
              const double ws = (j == 0 || j + 1 == ns) ? 0.5 * rays.ds : rays.ds;
              point[0] = s;
              for (int a = 0; a < metric.n; ++a)
                point[static_cast<size_t>(a) + 1] = z[a] + s * th[a];
              scatter_ray(out_geom, wr * ws * uval, point.data(), raw);
            }
          } else {
            VecN theta, xi;
            seed_null_covector(metric, 0.0, z, rays.dirs[k], theta, xi);
            PhasePoint p0{0.0, z, 1.0, xi};
            IntegratorOptions iopt;
            iopt.step_tol = opt.step_tol;
            iopt.ds_out = rays.ds;
            if (opt.fast_trace) {
              iopt.adaptive = false;
              iopt.fixed_ds = 0.5 * rays.ds;
            }
            Bicharacteristic path =
                integrate_bicharacteristic(metric, p0, rays.s_min, rays.s_max, iopt);
            for (std::size_t j = 0; j < path.s.size(); ++j) {
              const bool endpoint = (j == 0 || j + 1 == path.s.size());
              const double ws = endpoint ? 0.5 * rays.ds : rays.ds;
              point[0] = path.pts[j].t;
              for (int a = 0; a < metric.n; ++a)
                point[static_cast<size_t>(a) + 1] = path.pts[j].x[a];
              scatter_ray(out_geom, wr * ws * uval, point.data(), raw);
            }
          }
        }
      }
    }
  });

  GridField out(out_geom);
  for (int w = 0; w < threads; ++w) {
    const auto& raw = partial[static_cast<size_t>(w)];
    if (raw.empty()) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += raw[i];
  }
  const std::vector<double> nu = grid_measure(metric, out_geom);
  if (nu.empty()) {
    const double inv = 1.0 / out_geom.cell_volume();
    for (double& v : out.values) v *= inv;
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] /= nu[i];
  }
  return out;
}

GridField adjoint_analytic(const SpacetimeMetric& metric, const RayData& u,
                           const RayFamily& rays, const GridGeometry& out_geom,
                           const ForwardOptions& opt) {
  const int n = metric.n;
  const std::size_t nd = rays.dirs.size();
  if (metric.kind == MetricKind::GloballyHyperbolic)
    throw unsupported_error("adjoint: analytic mode needs Minkowski or standard static");
  if (metric.kind == MetricKind::StandardStatic && n != 3 && n != 2)
    throw unsupported_error("adjoint: analytic mode supports n = 2, 3");
  if (metric.kind == MetricKind::StandardStatic && n == 3)
    throw unsupported_error(
        "adjoint: analytic mode on static slices requires n = 2 (direction interpolation)");

  GridField out(out_geom);
  const bool minkowski = (metric.kind == MetricKind::Minkowski);

  parallel_for(out.size(), opt.threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> zp(static_cast<size_t>(n));
    std::size_t lidx[4];
    VecN ly(n);
    for (std::size_t fidx = lo; fidx < hi; ++fidx) {
      unflatten(out_geom, fidx, lidx);
      const double t = out_geom.coord(0, lidx[0]);
      for (int a = 0; a < n; ++a) ly[a] = out_geom.coord(a + 1, lidx[static_cast<size_t>(a) + 1]);
      double acc = 0.0;
      if (minkowski) {
        for (std::size_t k = 0; k < nd; ++k) {
          // Ray through (t, y) with direction k has base z = y - t theta_k.
          for (int a = 0; a < n; ++a) zp[static_cast<size_t>(a)] = ly[a] - t * rays.dirs[k][a];
          acc += rays.dir_weight * sample_ray_data(u, rays, zp.data(), k);
        }
      } else {
        // Backtrace each direction node through the static geodesic flow.
        for (std::size_t k = 0; k < nd; ++k) {
          VecN theta, xi;
          seed_null_covector(metric, t, ly, rays.dirs[k], theta, xi);
          // Fiber measure only: the h-sphere element at y per Euclidean angle.
          const double w = sphere_measure_factor(metric, ly, rays.dirs[k]) * rays.dir_weight;
          if (t == 0.0) {
            zp[0] = ly[0];
            zp[1] = ly[1];
            const double phi = std::atan2(theta[1], theta[0]);
            acc += w * sample_ray_data_angle(u, rays, zp.data(), phi);
            continue;
          }
          PhasePoint p0{t, ly, 1.0, xi};
          IntegratorOptions iopt;
          iopt.step_tol = opt.step_tol;
          iopt.ds_out = std::abs(t);
          Bicharacteristic path = integrate_bicharacteristic(metric, p0, 0.0, -t, iopt);
          if (path.exited_domain) continue;
          const PhasePoint& end = path.pts.back();
          const MatN hinv = metric.h_inv(end.t, end.x);
          const VecN v = matvec(hinv, end.xi);
          zp[0] = end.x[0];
          zp[1] = end.x[1];
          const double phi = std::atan2(v[1], v[0]);
          acc += w * sample_ray_data_angle(u, rays, zp.data(), phi);
        }
      }
      out.values[fidx] = acc;
    }
  });
  return out;
}

} // namespace

GridField adjoint(const SpacetimeMetric& metric, const RayData& u, const RayFamily& rays,
                  const GridGeometry& out_geom, AdjointMode mode, const ForwardOptions& opt) {
  if (u.num_bases != rays.num_bases() || u.num_dirs != rays.dirs.size())
    throw invalid_input_error("adjoint: ray data does not match the family");
  if (out_geom.spatial_dim() != metric.n)
    throw invalid_input_error("adjoint: output grid dimension mismatch");
  if (mode == AdjointMode::Discrete) return adjoint_discrete(metric, u, rays, out_geom, opt);
  return adjoint_analytic(metric, u, rays, out_geom, opt);
}

GridField normal_compose(const SpacetimeMetric& metric, const GridField& f,
                         const RayFamily& rays, AdjointMode mode, const ForwardOptions& opt) {
  const RayData lf = forward(metric, f, rays, opt);
  return adjoint(metric, lf, rays, f.geom, mode, opt);
}

GridField normal_compose_upsampled(const SpacetimeMetric& metric, const GridField& f,
                                   const RayFamily& rays, int factor, AdjointMode mode,
                                   const ForwardOptions& opt) {
  if (factor <= 1) return normal_compose(metric, f, rays, mode, opt);
  const GridField fine = fourier_upsample_spatial(f, factor);
  const RayData lf = forward(metric, fine, rays, opt);
  const GridField bp = adjoint(metric, lf, rays, fine.geom, mode, opt);
  return fourier_downsample_spatial(bp, factor);
}

} // namespace lrtk
