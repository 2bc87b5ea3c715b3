#pragma once

#include <cstdint>

#include "lrtk/grid.hpp"

namespace lrtk {

// Frequency-region selector for synthetic band-limited fields. Margins are
// ratios: space-like selection keeps |xi| >= margin |tau|, time-like keeps
// |tau| >= margin |xi|.
enum class FrequencyRegion { All, Spacelike, Timelike };

struct BandLimitSpec {
  double lambda_lo = 4.0;
  double lambda_hi = 8.0;
  FrequencyRegion region = FrequencyRegion::All;
  double cone_margin = 2.0;
  double window_radius = 0.0;    // 0 = 0.45 * half box extent
  double window_radius_t = 0.0;  // 0 = window_radius
  std::uint64_t seed = 1;
};

// Deterministic band-limited random field: seeded white noise filtered to a
// smooth dyadic annulus (and frequency region), then windowed to compact
// support. Unit L2 norm.
GridField make_bandlimited_field(const GridGeometry& geom, const BandLimitSpec& spec);

// Gaussian wave packet centered at (t0, x0) oscillating at covector
// (tau0, xi0) with envelope width `width`; clipped to exact compact support.
GridField make_wave_packet(const GridGeometry& geom, double t0, const double* x0,
                           double tau0, const double* xi0, double width);

// Plain Gaussian bump (numerically smooth probe).
GridField make_gaussian(const GridGeometry& geom, const double* center, double width);

// Smooth compactly supported bump profile: exp(1 - 1/(1 - r^2)) for r < 1.
double bump_profile(double r);

} // namespace lrtk
