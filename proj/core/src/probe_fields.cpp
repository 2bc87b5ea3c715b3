#include "lrtk/probe_fields.hpp"

#include <cmath>
#include <random>

#include "lrtk/errors.hpp"
#include "lrtk/spectral.hpp"

namespace lrtk {

double bump_profile(double r) {
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r2));
}

namespace {

double smoothstep01(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * (3.0 - 2.0 * u);
}

// Smooth annulus indicator in |zeta| with quarter-octave shoulders.
double annulus_mask(double r, double lo, double hi) {
  if (r <= 0.0) return 0.0;
  const double shoulder = 0.25;
  const double up = smoothstep01((std::log2(r) - std::log2(lo)) / shoulder + 1.0);
  const double down = smoothstep01((std::log2(hi) - std::log2(r)) / shoulder + 1.0);
  return up * down;
}

} // namespace

GridField make_bandlimited_field(const GridGeometry& geom, const BandLimitSpec& spec) {
  geom.validate();
  const int d = geom.axes();
  GridField noise(geom);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : noise.values) v = gauss(rng);

  std::vector<std::size_t> nopad(static_cast<size_t>(d), 0);
  SpectralField sf = fft_forward(noise, nopad);
  const double margin = spec.cone_margin;
  const FrequencyRegion region = spec.region;
  const double lo = spec.lambda_lo, hi = spec.lambda_hi;
  apply_spectral_symbol(sf, [lo, hi, region, margin](const double* zeta, const double*, int axes) {
    const double tau = std::abs(zeta[0]);
    double r2 = 0.0;
    for (int a = 1; a < axes; ++a) r2 += zeta[a] * zeta[a];
    const double xin = std::sqrt(r2);
    const double rho = std::sqrt(r2 + tau * tau);
    double mask = annulus_mask(rho, lo, hi);
    if (mask == 0.0) return 0.0;
    if (region == FrequencyRegion::Spacelike) {
      if (tau == 0.0) return mask;
      mask *= smoothstep01((xin / tau - margin) / 0.5);
    } else if (region == FrequencyRegion::Timelike) {
      if (xin == 0.0) return mask;
      mask *= smoothstep01((tau / xin - margin) / 0.5);
    }
    return mask;
  });
  GridField field = crop_to(fft_inverse(sf), geom);

  // Compact support window (smooth bump per axis group: time and space).
  double wr = spec.window_radius;
  if (wr <= 0.0) {
    double half = 1e300;
    for (int a = 1; a < d; ++a) half = std::min(half, 0.5 * geom.extent(a));
    wr = 0.45 * 2.0 * half;
  }
  double wrt = (spec.window_radius_t > 0.0) ? spec.window_radius_t : wr;

  std::size_t idx[4];
  double center[4];
  for (int a = 0; a < d; ++a)
    center[a] = geom.origin[static_cast<size_t>(a)] + 0.5 * geom.extent(a);
  for (std::size_t flat = 0; flat < field.size(); ++flat) {
    unflatten(geom, flat, idx);
    const double t = geom.coord(0, idx[0]) - center[0];
    double r2 = 0.0;
    for (int a = 1; a < d; ++a) {
      const double u = geom.coord(a, idx[a]) - center[a];
      r2 += u * u;
    }
    field.values[flat] *= bump_profile(std::abs(t) / wrt) * bump_profile(std::sqrt(r2) / wr);
  }

  const double n2 = field.norm2();
  if (n2 == 0.0) throw numerical_error("make_bandlimited_field: empty field");
  for (double& v : field.values) v /= n2;

  // Claim the support margin implied by the window.
  int margin_cells = 1 << 30;
  for (int a = 0; a < d; ++a) {
    const double radius = (a == 0) ? wrt : wr;
    const double slack = 0.5 * geom.extent(a) - radius;
    margin_cells =
        std::min(margin_cells, static_cast<int>(std::floor(slack / geom.spacing[static_cast<size_t>(a)])));
  }
  field.support_margin = std::max(0, margin_cells);
  return field;
}

GridField make_wave_packet(const GridGeometry& geom, double t0, const double* x0,
                           double tau0, const double* xi0, double width) {
  geom.validate();
  const int d = geom.axes();
  GridField f(geom);
  const double iw2 = 1.0 / (2.0 * width * width);
  std::size_t idx[4];
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    unflatten(geom, flat, idx);
    double phase = (geom.coord(0, idx[0]) - t0) * tau0;
    double r2 = 0.0;
    {
      const double u = geom.coord(0, idx[0]) - t0;
      r2 += u * u;
    }
    for (int a = 1; a < d; ++a) {
      const double u = geom.coord(a, idx[a]) - x0[a - 1];
      phase += u * xi0[a - 1];
      r2 += u * u;
    }
    const double env = std::exp(-r2 * iw2);
    f.values[flat] = (env < 1e-18) ? 0.0 : std::cos(phase) * env;
  }
  const double n2 = f.norm2();
  if (n2 > 0.0)
    for (double& v : f.values) v /= n2;
  // Envelope reaches the clip level at radius width * sqrt(2 * 18 ln 10).
  const double reach = width * std::sqrt(2.0 * 18.0 * std::log(10.0));
  int margin_cells = 1 << 30;
  for (int a = 0; a < d; ++a) {
    const double c = (a == 0) ? t0 : x0[a - 1];
    const double lo_slack = (c - reach) - geom.origin[static_cast<size_t>(a)];
    const double hi_slack = geom.origin[static_cast<size_t>(a)] + geom.extent(a) - (c + reach);
    const double slack = std::min(lo_slack, hi_slack);
    margin_cells =
        std::min(margin_cells, static_cast<int>(std::floor(slack / geom.spacing[static_cast<size_t>(a)])));
  }
  f.support_margin = std::max(0, margin_cells);
  return f;
}

GridField make_gaussian(const GridGeometry& geom, const double* center, double width) {
  geom.validate();
  const int d = geom.axes();
  GridField f(geom);
  const double iw2 = 1.0 / (2.0 * width * width);
  std::size_t idx[4];
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    unflatten(geom, flat, idx);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double u = geom.coord(a, idx[a]) - center[a];
      r2 += u * u;
    }
    const double env = std::exp(-r2 * iw2);
    f.values[flat] = (env < 1e-18) ? 0.0 : env;
  }
  return f;
}

} // namespace lrtk
