#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "lrtk/errors.hpp"
#include "lrtk/metric.hpp"
#include "lrtk/microlocal.hpp"
#include "lrtk/normal_operator.hpp"
#include "lrtk/probe_fields.hpp"
#include "lrtk/spectral.hpp"

using namespace lrtk;

namespace {

GridGeometry cube_geom(double half, std::size_t n_per_axis, int spatial_dim) {
  GridGeometry g;
  const int d = spatial_dim + 1;
  const double spacing = 2.0 * half / static_cast<double>(n_per_axis - 1);
  g.origin.assign(static_cast<size_t>(d), -half);
  g.spacing.assign(static_cast<size_t>(d), spacing);
  g.dims.assign(static_cast<size_t>(d), n_per_axis);
  return g;
}

// One-dimensional reference: band energies of the profile |eta|^mu over the
// same dyadic shells, fitted with the same amplitude-scale convention. The
// synthesis cuts the profile at 3/4 Nyquist, so the reference does too.
double profile_slope_1d(double mu, const std::vector<double>& bands, double eta_max) {
  std::vector<double> energy(bands.size(), 0.0);
  const double deta = 0.005;
  for (double eta = deta; eta < eta_max; eta += deta) {
    const double p2 = std::pow(eta, 2.0 * mu);
    for (std::size_t b = 0; b < bands.size(); ++b)
      if (eta >= bands[b] && eta < 2.0 * bands[b]) energy[b] += p2 * deta;
  }
  return fit_log_slope(bands, energy).slope;
}

} // namespace

TEST_CASE("synthesized hyperplane conormal matches the 1-D profile oracle") {
  const GridGeometry g = cube_geom(4.0, 129, 2);
  ConormalSpec spec;
  spec.kind = CarrierKind::Hyperplane;
  spec.normal = {1.0, 0.0, 0.0};  // carrier {t = 0}
  spec.offset = 0.0;
  spec.symbol_order = -1.0;
  spec.window_radius = 2.5;
  const GridField f = synthesize(spec, g);
  CHECK(f.support_margin > 0);
  CHECK_NOTHROW(f.check_support_margin());

  const double point[3] = {0.0, 0.0, 0.0};
  const double dir[3] = {1.0, 0.0, 0.0};
  const DecayReport rep = wf_decay_probe(f, point, dir);
  const double eta_max = 0.75 * M_PI / g.spacing[0];
  const double expected = profile_slope_1d(spec.symbol_order, rep.band_centers, eta_max);
  MESSAGE("measured slope ", rep.slope, " expected ", expected);
  CHECK(std::abs(rep.slope - expected) <= 0.1);
  CHECK_FALSE(rep.numerically_smooth);

  // Tangent to the carrier there is nothing to see.
  const double tangent[3] = {0.0, 1.0, 0.0};
  const DecayReport rep_t = wf_decay_probe(f, point, tangent);
  MESSAGE("tangent slope ", rep_t.slope);
  CHECK(rep_t.numerically_smooth);
}

TEST_CASE("synthesize validates carriers and amplitudes") {
  const GridGeometry g = cube_geom(4.0, 65, 2);
  ConormalSpec spec;
  spec.kind = CarrierKind::Hyperplane;
  spec.normal = {1.0, 0.0, 0.0};
  spec.offset = 30.0;  // outside the grid
  CHECK_THROWS_AS(synthesize(spec, g), invalid_input_error);
  spec.normal = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(synthesize(spec, g), invalid_input_error);

  // Zero amplitude gives the zero field.
  spec.normal = {1.0, 0.0, 0.0};
  spec.offset = 0.0;
  spec.amplitude = [](const double*) { return 0.0; };
  const GridField z = synthesize(spec, g);
  CHECK(z.norm2() == 0.0);

  // Linearity in the amplitude profile.
  spec.amplitude = [](const double* zp) { return 0.5 + 0.25 * zp[1]; };
  const GridField f1 = synthesize(spec, g);
  spec.amplitude = [](const double* zp) { return 2.0 * (0.5 + 0.25 * zp[1]); };
  const GridField f2 = synthesize(spec, g);
  const GridField diff = f2 - (2.0 * f1);
  CHECK(diff.norm2() <= 1e-12 * f2.norm2());
}

TEST_CASE("light-cone carrier synthesis has conormal decay at the sheet") {
  const GridGeometry g = cube_geom(4.0, 129, 2);
  ConormalSpec spec;
  spec.kind = CarrierKind::LightCone;
  spec.vertex = {-2.0, 0.0, 0.0};
  spec.cone_sign = +1;
  spec.symbol_order = -1.0;
  spec.window_radius = 3.0;
  const GridField f = synthesize(spec, g);
  CHECK(f.norm2() > 0.0);
  // Probe on the forward sheet at x = (2, 0): t = 0, conormal (1, -1, 0).
  const double point[3] = {0.0, 2.0, 0.0};
  const double dir[3] = {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};
  const DecayReport rep = wf_decay_probe(f, point, dir);
  CHECK_FALSE(rep.numerically_smooth);
}

TEST_CASE("point packets and smooth fields probe as smooth") {
  const GridGeometry g = cube_geom(4.0, 65, 2);
  const double c[3] = {0.0, 0.0, 0.0};
  const GridField smooth = make_gaussian(g, c, 0.8);
  const double dir[3] = {0.0, 1.0, 0.0};
  const DecayReport rep = wf_decay_probe(smooth, c, dir);
  CHECK(rep.slope < -10.0);
  CHECK(rep.numerically_smooth);

  // A space-like packet seen from a direction off its covector. The tight
  // scale keeps the envelope at the clip level by the box edge, so the
  // spectrum is truncation-free.
  ConormalSpec spec;
  spec.kind = CarrierKind::Point;
  spec.center = {0.0, 0.0, 0.0};
  spec.covector = {2.0, 12.0, 0.0};
  spec.scale = 0.45;
  const GridField packet = synthesize(spec, g);
  const double off_dir[3] = {0.0, 0.0, 1.0};
  const DecayReport rep_off = wf_decay_probe(packet, c, off_dir);
  CHECK(rep_off.numerically_smooth);
}

TEST_CASE("wf probe validates inputs") {
  const GridGeometry g = cube_geom(1.0, 17, 2);  // too coarse for four bands
  GridField f(g);
  f.values[f.size() / 2] = 1.0;
  const double point[3] = {0.0, 0.0, 0.0};
  const double dir[3] = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(wf_decay_probe(f, point, dir), invalid_input_error);
  const double outside[3] = {9.0, 0.0, 0.0};
  CHECK_THROWS_AS(wf_decay_probe(f, outside, dir), invalid_input_error);
}

TEST_CASE("decay slope of Nf shifts by one order for space-like conormals") {
  const GridGeometry g = cube_geom(4.0, 129, 2);
  ConormalSpec spec;
  spec.kind = CarrierKind::Hyperplane;
  spec.normal = {0.0, 1.0, 0.0};  // carrier {x1 = 0}: space-like conormal
  spec.offset = 0.0;
  spec.symbol_order = -1.0;
  spec.window_radius = 2.5;
  const GridField f = synthesize(spec, g);
  MultiplierSymbol m;
  m.n = 2;
  const GridField nf = apply_multiplier(f, m, default_pad(g));

  const double point[3] = {0.0, 0.0, 0.0};
  const double dir[3] = {0.0, 1.0, 0.0};
  const DecayReport rf = wf_decay_probe(f, point, dir);
  const DecayReport rnf = wf_decay_probe(nf, point, dir);
  MESSAGE("slope f ", rf.slope, " slope Nf ", rnf.slope);
  CHECK(std::abs((rf.slope - rnf.slope) - 1.0) <= 0.15);
}

TEST_CASE("transport kernel constants and quadrature") {
  CHECK(transport_kernel_constant(2) ==
        doctest::Approx(4.0 * M_PI * std::sqrt(0.5 * M_PI)).epsilon(1e-14));
  CHECK(transport_kernel_constant(3) == doctest::Approx(4.0 * M_PI * M_PI).epsilon(1e-14));
  CHECK_THROWS_AS(transport_kernel_constant(4), unsupported_error);

  // The n = 2 constant against the profile magnitude: |A(sigma, 1)| decays
  // like kappa_2 / sqrt(sigma) with an oscillating two-endpoint factor;
  // averaging the squared magnitude over a period isolates kappa_2.
  const double kappa2 = transport_kernel_constant(2);
  const double sigma0 = 24.0;
  double mean_sq = 0.0;
  const int samples = 64;
  for (int j = 0; j < samples; ++j) {
    const double sigma = sigma0 + M_PI * j / samples;  // one oscillation period
    const auto prof = a_profile(2, sigma, 1.0, AProfileMode::Quadrature, 96);
    mean_sq += std::norm(prof) * sigma / samples;
  }
  // E|A|^2 sigma = 2 kappa_2^2 over the period (two unit-modulus endpoint
  // phasors in quadrature on average).
  CHECK(std::sqrt(0.5 * mean_sq) == doctest::Approx(kappa2).epsilon(0.02));
}

namespace {

Bicharacteristic line_grid(double s_lo, double s_hi, int m) {
  Bicharacteristic b;
  b.s.resize(static_cast<size_t>(m));
  b.pts.resize(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j)
    b.s[static_cast<size_t>(j)] = s_lo + (s_hi - s_lo) * j / (m - 1);
  return b;
}

} // namespace

TEST_CASE("transport_alpha: zeros, parity, closed-form weight") {
  const Bicharacteristic grid = line_grid(-4.0, 4.0, 1601);

  std::vector<double> zero(grid.s.size(), 0.0);
  CHECK(transport_alpha(grid, zero, 3).alpha == 0.0);
  CHECK(transport_alpha(grid, zero, 2).alpha == 0.0);

  // Odd principal-value kernel annihilates symbols even about s'.
  std::vector<double> even(grid.s.size());
  for (std::size_t j = 0; j < grid.s.size(); ++j)
    even[j] = std::exp(-grid.s[j] * grid.s[j]);
  const TransportResult podd = transport_alpha(grid, even, 3, 0.0);
  CHECK(std::abs(podd.alpha) <= 1e-10);

  // n = 2: the indicator of [s'-1, s'+1] integrates |u|^{-1/2} to 4.
  std::vector<double> box(grid.s.size());
  for (std::size_t j = 0; j < grid.s.size(); ++j)
    box[j] = (std::abs(grid.s[j]) <= 1.0) ? 1.0 : 0.0;
  const TransportResult t2 = transport_alpha(grid, box, 2, 0.0);
  const double kappa2 = transport_kernel_constant(2);
  // Cell-exact weights: the sample boxes tile [-1-ds/2, 1+ds/2]; compare
  // against the exact integral over that union.
  const double ds = grid.s[1] - grid.s[0];
  const double edge = 1.0 + 0.5 * ds;
  const double exact = 4.0 * std::sqrt(edge);
  CHECK(t2.alpha == doctest::Approx(kappa2 * exact).epsilon(1e-9));
  CHECK(t2.kernel_constant == kappa2);

  // Linearity.
  std::vector<double> combo(grid.s.size());
  for (std::size_t j = 0; j < grid.s.size(); ++j) combo[j] = 2.0 * even[j] - 3.0 * box[j];
  const double lhs = transport_alpha(grid, combo, 2, 0.3).alpha;
  const double rhs = 2.0 * transport_alpha(grid, even, 2, 0.3).alpha -
                     3.0 * transport_alpha(grid, box, 2, 0.3).alpha;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("invisible_leading cancels its own transport") {
  const SpacetimeMetric mink = make_minkowski(2);
  ConormalSpec carrier;
  carrier.kind = CarrierKind::Hyperplane;
  carrier.normal = {1.0, -1.0, 0.0};  // light-like normal
  carrier.offset = 0.0;
  carrier.symbol_order = -1.0;

  auto a = [](double s) { return bump_profile((s + 1.2) / 0.7); };
  auto b = [](double s) { return bump_profile((s - 1.2) / 0.7); };
  const InvisibleResult res = invisible_leading(mink, carrier, a, b, 2.4, -4.0, 4.0);
  CHECK(res.alpha != 0.0);
  CHECK(res.beta != 0.0);
  CHECK(res.residual <= 1e-6 * res.scale);

  // The combined amplitude must change sign somewhere along the flow.
  const GridGeometry g = cube_geom(4.0, 65, 2);
  CHECK_FALSE(sign_definite_check(res.f0, mink, g));

  // One-signed profiles pass the check.
  ConormalSpec pos = carrier;
  pos.amplitude = [&](const double* zp) { return bump_profile(zp[0] / 2.0); };
  CHECK(sign_definite_check(pos, mink, g));
  ConormalSpec none = carrier;  // no amplitude: constant one
  CHECK(sign_definite_check(none, mink, g));

  // Overlapping supports violate the precondition.
  auto b_bad = [](double s) { return bump_profile((s + 0.8) / 0.7); };
  CHECK_THROWS_AS(invisible_leading(mink, carrier, a, b_bad, 0.4, -4.0, 4.0),
                  invalid_input_error);

  // Zero first profile produces the zero combined symbol.
  auto zero_fn = [](double) { return 0.0; };
  const InvisibleResult rz = invisible_leading(mink, carrier, zero_fn, b, 2.4, -4.0, 4.0);
  CHECK(rz.alpha == 0.0);
  double worst = 0.0;
  for (double t : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const double zp[3] = {t, 0.0, 0.0};
    worst = std::max(worst, std::abs(rz.f0.amplitude(zp)));
  }
  CHECK(worst == 0.0);
}

TEST_CASE("sobolev gain fit: identity and multiplier orders") {
  const GridGeometry g = cube_geom(4.0, 65, 2);
  const std::vector<double> bands = {3.0, 6.0, 12.0, 24.0};
  auto probe = [&](double lam) {
    const double x0[2] = {0.0, 0.0};
    const double xi0[2] = {lam, 0.0};
    return make_wave_packet(g, 0.0, x0, 0.3 * lam, xi0, 1.2);
  };

  const GainFit ident = sobolev_gain_fit([](const GridField& f) { return f.norm2(); },
                                         bands, probe);
  CHECK(std::abs(ident.gain) <= 0.05);

  MultiplierSymbol m;
  m.n = 2;
  const GainFit nm = sobolev_gain_fit(
      [&](const GridField& f) {
        return apply_multiplier(f, m, default_pad(g)).norm2();
      },
      bands, probe);
  // The normal operator smooths by one order: gain +1 (slope -1).
  CHECK(std::abs(nm.gain - 1.0) <= 0.1);

  CHECK_THROWS_AS(sobolev_gain_fit([](const GridField& f) { return f.norm2(); },
                                   {2.0}, probe),
                  invalid_input_error);
}
