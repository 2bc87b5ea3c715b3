#include "lrtk/microlocal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "lrtk/errors.hpp"
#include "lrtk/normal_operator.hpp"
#include "lrtk/probe_fields.hpp"
#include "lrtk/spectral.hpp"

namespace lrtk {

namespace {

// 1-D conormal profile with Fourier magnitude |eta|^mu, synthesized once on
// a fine auxiliary grid and linearly interpolated. Real and even. The
// inverse DFT centers the profile at index 0, so evaluation wraps the
// argument periodically; the period is twice the needed range.
struct Profile1D {
  double du = 0.0;
  std::vector<double> values;

  double eval(double u) const {
    const double m = static_cast<double>(values.size());
    double p = u / du;
    p -= std::floor(p / m) * m;  // wrap into [0, m)
    const std::size_t i0 = static_cast<std::size_t>(p) % values.size();
    const std::size_t i1 = (i0 + 1) % values.size();
    const double w = p - std::floor(p);
    return (1.0 - w) * values[i0] + w * values[i1];
  }
};

Profile1D build_profile(double mu, double u_max, double eta_lo, double eta_hi) {
  const std::size_t n = 8192;
  Profile1D prof;
  prof.du = 2.0 * u_max / static_cast<double>(n);

  GridGeometry g1;
  g1.origin = {0.0, 0.0};
  g1.spacing = {1.0, prof.du};
  g1.dims = {2, n};  // dummy leading axis so the FFT helpers apply
  GridField spike(g1);

  std::vector<std::size_t> nopad = {0, 0};
  SpectralField sf = fft_forward(spike, nopad);
  // Write the spectrum directly: cosine profile, magnitude |eta|^mu with
  // smooth quarter-octave shoulders at the band edges.
  for (std::size_t k = 0; k < sf.coeff.size(); ++k) sf.coeff[k] = 0.0;
  const std::size_t last = sf.reduced_last();
  auto shoulder = [](double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * (3.0 - 2.0 * x);
  };
  for (std::size_t k = 1; k < last; ++k) {
    const double eta = sf.freq(1, k);
    const double up = shoulder((std::log2(eta) - std::log2(eta_lo)) / 0.25 + 1.0);
    const double down = shoulder((std::log2(eta_hi) - std::log2(eta)) / 0.25 + 1.0);
    const double mask = up * down;
    if (mask == 0.0) continue;
    sf.coeff[k] = {std::pow(eta, mu) * mask, 0.0};
  }
  GridField back = fft_inverse(sf);
  prof.values.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) prof.values[j] = back.values[j];
  // Normalize the peak to one for well-scaled fields.
  double peak = 0.0;
  for (double v : prof.values) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : prof.values) v /= peak;
  return prof;
}

} // namespace

GridField synthesize(const ConormalSpec& spec, const GridGeometry& geom) {
  geom.validate();
  const int d = geom.axes();

  if (spec.kind != CarrierKind::Point &&
      auto_dyadic_bands(geom, 4).size() < 4)
    throw invalid_input_error("synthesize: resolution cannot hold four dyadic bands");

  double wc[4];
  if (!spec.window_center.empty()) {
    if (spec.window_center.size() != static_cast<std::size_t>(d))
      throw invalid_input_error("synthesize: window center dimension mismatch");
    for (int a = 0; a < d; ++a) wc[a] = spec.window_center[static_cast<size_t>(a)];
  } else {
    for (int a = 0; a < d; ++a)
      wc[a] = geom.origin[static_cast<size_t>(a)] + 0.5 * geom.extent(a);
  }
  double wr = spec.window_radius;
  if (wr <= 0.0) {
    double half = 1e300;
    for (int a = 0; a < d; ++a) half = std::min(half, 0.5 * geom.extent(a));
    wr = 0.8 * half;
  }

  if (spec.kind == CarrierKind::Point) {
    if (spec.center.size() != static_cast<std::size_t>(d) ||
        spec.covector.size() != static_cast<std::size_t>(d))
      throw invalid_input_error("synthesize: point spec needs center and covector");
    double cnorm = 0.0;
    for (double c : spec.covector) cnorm += c * c;
    if (cnorm == 0.0) throw invalid_input_error("synthesize: zero wave-packet covector");
    GridField f = make_wave_packet(geom, spec.center[0], spec.center.data() + 1,
                                   spec.covector[0], spec.covector.data() + 1, spec.scale);
    if (spec.amplitude) {
      std::size_t idx[4];
      double z[4];
      for (std::size_t flat = 0; flat < f.size(); ++flat) {
        unflatten(geom, flat, idx);
        for (int a = 0; a < d; ++a) z[a] = geom.coord(a, idx[a]);
        f.values[flat] *= spec.amplitude(z);
      }
    }
    return f;
  }

  // Carrier phase function and in-grid check.
  double nrm[4] = {0, 0, 0, 0};
  double vx[4] = {0, 0, 0, 0};
  if (spec.kind == CarrierKind::Hyperplane) {
    if (spec.normal.size() != static_cast<std::size_t>(d))
      throw invalid_input_error("synthesize: hyperplane normal dimension mismatch");
    double nn = 0.0;
    for (double v : spec.normal) nn += v * v;
    if (nn == 0.0) throw invalid_input_error("synthesize: zero hyperplane normal");
    const double inv = 1.0 / std::sqrt(nn);
    for (int a = 0; a < d; ++a) nrm[a] = spec.normal[static_cast<size_t>(a)] * inv;
  } else {
    if (spec.vertex.size() != static_cast<std::size_t>(d))
      throw invalid_input_error("synthesize: cone vertex dimension mismatch");
    for (int a = 0; a < d; ++a) vx[a] = spec.vertex[static_cast<size_t>(a)];
  }

  auto phase = [&](const double* z) -> double {
    if (spec.kind == CarrierKind::Hyperplane) {
      double u = -spec.offset;
      for (int a = 0; a < d; ++a) u += z[a] * nrm[a];
      return u;
    }
    double r2 = 0.0;
    for (int a = 1; a < d; ++a) r2 += (z[a] - vx[a]) * (z[a] - vx[a]);
    return (z[0] - vx[0]) - spec.cone_sign * std::sqrt(r2);
  };

  // Carrier must intersect the window interior.
  {
    bool hit = false;
    std::size_t idx[4];
    double z[4];
    GridField probe(geom);
    for (std::size_t flat = 0; flat < probe.size(); flat += 7) {
      unflatten(geom, flat, idx);
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        z[a] = geom.coord(a, idx[a]);
        r2 += (z[a] - wc[a]) * (z[a] - wc[a]);
      }
      if (r2 > wr * wr) continue;
      if (std::abs(phase(z)) < geom.spacing[0]) {
        hit = true;
        break;
      }
    }
    if (!hit) throw invalid_input_error("synthesize: carrier misses the window");
  }

  // Profile band: from four grid wavelengths up to 3/4 Nyquist.
  double nyq = 1e300;
  for (int a = 0; a < d; ++a) nyq = std::min(nyq, M_PI / geom.spacing[static_cast<size_t>(a)]);
  double lmin = 0.0;
  for (int a = 0; a < d; ++a) lmin = std::max(lmin, 2.0 * M_PI / geom.extent(a));
  double diag = 0.0;
  for (int a = 0; a < d; ++a) diag += geom.extent(a) * geom.extent(a);
  const Profile1D prof = build_profile(spec.symbol_order, std::sqrt(diag), 2.0 * lmin,
                                       0.75 * nyq);

  GridField f(geom);
  std::size_t idx[4];
  double z[4];
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    unflatten(geom, flat, idx);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      z[a] = geom.coord(a, idx[a]);
      r2 += (z[a] - wc[a]) * (z[a] - wc[a]);
    }
    double w = bump_profile(std::sqrt(r2) / wr);
    if (w == 0.0) continue;
    if (spec.kind == CarrierKind::LightCone && spec.vertex_clearance > 0.0) {
      double rx2 = 0.0;
      for (int a = 1; a < d; ++a) rx2 += (z[a] - vx[a]) * (z[a] - vx[a]);
      const double rx = std::sqrt(rx2);
      if (rx < spec.vertex_clearance) {
        w = 0.0;
      } else if (rx < 2.0 * spec.vertex_clearance) {
        const double u = rx / spec.vertex_clearance - 1.0;
        w *= u * u * (3.0 - 2.0 * u);
      }
      if (w == 0.0) continue;
    }
    double amp = 1.0;
    if (spec.amplitude) amp = spec.amplitude(z);
    if (amp == 0.0) continue;
    f.values[flat] = amp * w * prof.eval(phase(z));
  }

  // Support margin from the window ball.
  int margin_cells = 1 << 30;
  for (int a = 0; a < d; ++a) {
    const double lo_slack = (wc[a] - wr) - geom.origin[static_cast<size_t>(a)];
    const double hi_slack = geom.origin[static_cast<size_t>(a)] + geom.extent(a) - (wc[a] + wr);
    const double slack = std::min(lo_slack, hi_slack);
    margin_cells =
        std::min(margin_cells, static_cast<int>(std::floor(slack / geom.spacing[static_cast<size_t>(a)])));
  }
  f.support_margin = std::max(0, margin_cells);
  return f;
}

DecayReport wf_decay_probe(const GridField& f, const double* point,
                           const double* direction, const WfProbeOptions& opt) {
  const int d = f.geom.axes();
  for (int a = 0; a < d; ++a) {
    const double lo = f.geom.origin[static_cast<size_t>(a)];
    const double hi = lo + f.geom.extent(a);
    if (point[a] < lo || point[a] > hi)
      throw invalid_input_error("wf_decay_probe: point outside grid");
  }

  double width = opt.window_width;
  if (width <= 0.0) {
    double ext = 1e300;
    for (int a = 0; a < d; ++a) ext = std::min(ext, f.geom.extent(a));
    width = ext / 8.0;
  }

  GridField g = f;
  {
    std::size_t idx[4];
    const double iw2 = 1.0 / (2.0 * width * width);
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
      unflatten(f.geom, flat, idx);
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double u = f.geom.coord(a, idx[a]) - point[a];
        r2 += u * u;
      }
      g.values[flat] *= std::exp(-r2 * iw2);
    }
  }

  DecayReport rep;
  rep.window_width = width;
  rep.point.assign(point, point + d);
  rep.direction.assign(direction, direction + d);
  rep.cone_half_angle = opt.cone_half_angle;
  rep.smooth_floor = opt.smooth_floor;

  if (!opt.band_centers.empty()) {
    rep.band_centers = opt.band_centers;
  } else {
    rep.band_centers = auto_dyadic_bands(f.geom, 4);
  }
  if (rep.band_centers.size() < 4)
    throw invalid_input_error("wf_decay_probe: fewer than four usable bands");

  rep.band_energies = band_energies(g, rep.band_centers, direction, opt.cone_half_angle);

  // Directional content below the negligible floor (relative to the whole
  // windowed field) probes as smooth: there is nothing to fit.
  double total = 0.0;
  for (double v : g.values) total += v * v;
  total *= g.geom.cell_volume();
  double directional = 0.0;
  for (double e : rep.band_energies) directional += e;
  if (directional <= opt.negligible_fraction * std::max(total, 1e-300)) {
    rep.slope = opt.smooth_floor;
    rep.numerically_smooth = true;
    return rep;
  }

  const SlopeFit fit = fit_log_slope(rep.band_centers, rep.band_energies);
  if (fit.bands_used < 4)
    throw invalid_input_error("wf_decay_probe: fewer than four nonzero bands");
  rep.slope = fit.slope;
  rep.confidence = fit.confidence;
  rep.numerically_smooth = (fit.slope <= opt.smooth_floor);
  return rep;
}

double transport_kernel_constant(int n) {
  if (n == 2) {
    // Endpoint asymptotics of the profile integral at unit frequency:
    // |A(sigma, 1)| ~ C_2 sqrt(pi / (2 sigma)) per cone sheet.
    return cone_multiplier_constant(2) * std::sqrt(0.5 * M_PI);
  }
  if (n == 3) {
    // Flow-out symbol magnitude C_3 / |s' - s| at unit frequency.
    return cone_multiplier_constant(3);
  }
  throw unsupported_error("transport_alpha supports n=2,3");
}

TransportResult transport_alpha(const Bicharacteristic& bichar, std::span<const double> a,
                                int n, double s_ref) {
  if (n != 2 && n != 3) throw unsupported_error("transport_alpha supports n=2,3");
  const std::size_t m = bichar.s.size();
  if (a.size() != m) throw invalid_input_error("transport_alpha: sample count mismatch");
  if (m < 8) throw invalid_input_error("transport_alpha: too few samples");
  const double ds = bichar.s[1] - bichar.s[0];
  if (!(ds > 0.0)) throw invalid_input_error("transport_alpha: parameter grid must increase");

  const double kappa = transport_kernel_constant(n);

  auto alpha_at = [&](double sp) -> double {
    double acc = 0.0;
    if (n == 3) {
      // Principal value with symmetric excision of two sample spacings.
      const double excise = 2.0 * ds;
      for (std::size_t j = 0; j < m; ++j) {
        const double u = sp - bichar.s[j];
        if (std::abs(u) <= excise) continue;
        acc += a[j] / u * ds;
      }
    } else {
      // Integrable kernel: exact integral of |u|^{-1/2} over each cell.
      for (std::size_t j = 0; j < m; ++j) {
        const double lo = sp - (bichar.s[j] + 0.5 * ds);
        const double hi = sp - (bichar.s[j] - 0.5 * ds);
        // integral of |u|^{-1/2} over [lo, hi] (u decreasing in s).
        auto anti = [](double u) { return (u >= 0.0) ? 2.0 * std::sqrt(u) : -2.0 * std::sqrt(-u); };
        acc += a[j] * std::abs(anti(hi) - anti(lo));
      }
    }
    return kappa * acc;
  };

  TransportResult res;
  res.kernel_constant = kappa;
  const double mid = std::isnan(s_ref) ? 0.5 * (bichar.s.front() + bichar.s.back()) : s_ref;
  res.alpha = alpha_at(mid);

  // Constancy check over the middle half of the sampled range.
  const double span = bichar.s.back() - bichar.s.front();
  double amax = res.alpha, amin = res.alpha;
  for (int q = 0; q < 9; ++q) {
    const double sp = bichar.s.front() + span * (0.3 + 0.05 * q);
    const double v = alpha_at(sp);
    amax = std::max(amax, v);
    amin = std::min(amin, v);
  }
  res.max_deviation = amax - amin;
  return res;
}

InvisibleResult invisible_leading(const SpacetimeMetric& metric, const ConormalSpec& carrier,
                                  const std::function<double(double)>& a,
                                  const std::function<double(double)>& b, double separation,
                                  double s_lo, double s_hi, int samples) {
  if (metric.n != 2 && metric.n != 3)
    throw unsupported_error("invisible_leading supports n=2,3");
  if (carrier.kind != CarrierKind::Hyperplane)
    throw invalid_input_error("invisible_leading: carrier must be a null hyperplane");

  // Sample both profiles on a shared parameter grid; the flow parameter of
  // a null hyperplane carrier is the time coordinate.
  Bicharacteristic grid;
  grid.s.resize(static_cast<size_t>(samples));
  grid.pts.resize(static_cast<size_t>(samples));
  const double ds = (s_hi - s_lo) / (samples - 1);
  std::vector<double> av(static_cast<size_t>(samples)), bv(static_cast<size_t>(samples));
  double overlap = 0.0, anorm = 0.0, bnorm = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double s = s_lo + ds * j;
    grid.s[static_cast<size_t>(j)] = s;
    av[static_cast<size_t>(j)] = a(s);
    bv[static_cast<size_t>(j)] = b(s);
    overlap += std::abs(av[static_cast<size_t>(j)] * bv[static_cast<size_t>(j)]);
    anorm = std::max(anorm, std::abs(av[static_cast<size_t>(j)]));
    bnorm = std::max(bnorm, std::abs(bv[static_cast<size_t>(j)]));
  }
  if (overlap > 0.0)
    throw invalid_input_error("invisible_leading: projected supports overlap");
  (void)separation;

  // Support centroids fix the probe reference parameter.
  double ca = 0.0, wa = 0.0, cb = 0.0, wb = 0.0;
  for (int j = 0; j < samples; ++j) {
    ca += std::abs(av[static_cast<size_t>(j)]) * grid.s[static_cast<size_t>(j)];
    wa += std::abs(av[static_cast<size_t>(j)]);
    cb += std::abs(bv[static_cast<size_t>(j)]) * grid.s[static_cast<size_t>(j)];
    wb += std::abs(bv[static_cast<size_t>(j)]);
  }
  const double s_ref = (wa > 0.0 && wb > 0.0) ? 0.5 * (ca / wa + cb / wb)
                                              : 0.5 * (s_lo + s_hi);

  const TransportResult ta = transport_alpha(grid, av, metric.n, s_ref);
  const TransportResult tb = transport_alpha(grid, bv, metric.n, s_ref);

  InvisibleResult out;
  out.alpha = ta.alpha;
  out.beta = tb.alpha;
  out.scale = std::abs(ta.alpha) * bnorm + std::abs(tb.alpha) * anorm;

  std::vector<double> combined(static_cast<size_t>(samples));
  for (int j = 0; j < samples; ++j)
    combined[static_cast<size_t>(j)] =
        out.beta * av[static_cast<size_t>(j)] - out.alpha * bv[static_cast<size_t>(j)];
  const TransportResult tc = transport_alpha(grid, combined, metric.n, s_ref);
  out.residual = std::abs(tc.alpha);

  out.f0 = carrier;
  const double alpha = out.alpha, beta = out.beta;
  auto af = a;
  auto bf = b;
  out.f0.amplitude = [alpha, beta, af, bf](const double* z) {
    return beta * af(z[0]) - alpha * bf(z[0]);
  };
  return out;
}

bool sign_definite_check(const ConormalSpec& spec, const SpacetimeMetric& metric,
                         const GridGeometry& geom, int lines, int samples) {
  (void)metric;
  if (!spec.amplitude) return true;  // constant amplitude
  const int d = geom.axes();
  // Sample the amplitude along carrier flow lines: for hyperplane and cone
  // carriers the flow advances the time coordinate at unit rate.
  for (int l = 0; l < lines; ++l) {
    int sign = 0;
    for (int j = 0; j < samples; ++j) {
      double z[4];
      const double t = geom.origin[0] + geom.extent(0) * j / (samples - 1);
      z[0] = t;
      for (int a = 1; a < d; ++a) {
        const double frac = (lines <= 1) ? 0.5
                                         : 0.15 + 0.7 * ((l + a * 7) % lines) /
                                               static_cast<double>(lines - 1 + 1e-9);
        z[a] = geom.origin[static_cast<size_t>(a)] + geom.extent(a) * frac;
      }
      // Advance spatially along the carrier flow for hyperplane carriers.
      if (spec.kind == CarrierKind::Hyperplane && spec.normal.size() == static_cast<std::size_t>(d)) {
        double nn = 0.0;
        for (int a2 = 1; a2 < d; ++a2) nn += spec.normal[static_cast<size_t>(a2)] * spec.normal[static_cast<size_t>(a2)];
        if (nn > 0.0) {
          const double inv = 1.0 / std::sqrt(nn);
          for (int a2 = 1; a2 < d; ++a2)
            z[a2] -= spec.normal[static_cast<size_t>(a2)] * inv * (t - geom.origin[0]);
        }
      }
      const double v = spec.amplitude(z);
      if (v == 0.0) continue;
      const int s = (v > 0.0) ? 1 : -1;
      if (sign == 0) sign = s;
      if (s != sign) return false;
    }
  }
  return true;
}

GainFit sobolev_gain_fit(const std::function<double(const GridField&)>& op_output_norm,
                         const std::vector<double>& bands,
                         const std::function<GridField(double)>& probe_builder) {
  if (bands.size() < 2) throw invalid_input_error("sobolev_gain_fit: need >= 2 bands");
  GainFit fit;
  std::vector<double> xs, ys;
  for (double lam : bands) {
    const GridField f = probe_builder(lam);
    const double fn = f.norm2();
    if (fn == 0.0) throw numerical_error("sobolev_gain_fit: zero probe");
    const double on = op_output_norm(f);
    fit.ratios.push_back(on / fn);
    if (on <= 0.0) throw numerical_error("sobolev_gain_fit: operator output vanished");
    xs.push_back(std::log2(lam));
    ys.push_back(std::log2(on / fn));
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-9) throw numerical_error("sobolev_gain_fit: degenerate fit");
  const double slope = (n * sxy - sx * sy) / den;
  const double icept = (sy - slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (icept + slope * xs[i]);
    ss += r * r;
  }
  fit.gain = -slope;
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

} // namespace lrtk
