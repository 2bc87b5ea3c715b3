#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "lrtk/errors.hpp"
#include "lrtk/metric.hpp"
#include "lrtk/probe_fields.hpp"
#include "lrtk/ray_transform.hpp"
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

GridField gaussian_tx(const GridGeometry& g) {
  GridField f(g);
  std::size_t idx[4];
  for (std::size_t i = 0; i < f.size(); ++i) {
    unflatten(g, i, idx);
    double r2 = 0.0;
    for (int a = 0; a < g.axes(); ++a) {
      const double c = g.coord(a, idx[a]);
      r2 += c * c;
    }
    f.values[i] = std::exp(-r2);
  }
  return f;
}

RayFamily single_ray_family(const SpacetimeMetric& m, double s_half, double ds) {
  RayFamilySpec spec;
  spec.z_origin = {0.0, 0.0};
  spec.z_spacing = {1.0, 1.0};
  spec.z_dims = {1, 1};
  spec.direction_count = 8;
  spec.s_min = -s_half;
  spec.s_max = s_half;
  spec.ds = ds;
  return build_ray_family(m, spec);
}

} // namespace

TEST_CASE("ray family layout: uniform circle, weights, normalization") {
  const SpacetimeMetric mink = make_minkowski(2);
  RayFamilySpec spec;
  spec.z_origin = {-1.0, -1.0};
  spec.z_spacing = {0.5, 0.5};
  spec.z_dims = {5, 5};
  spec.direction_count = 8;
  spec.s_min = -1.0;
  spec.s_max = 1.0;
  const RayFamily fam = build_ray_family(mink, spec);
  REQUIRE(fam.dirs.size() == 8);
  for (int k = 0; k < 8; ++k) {
    const double phi = 2.0 * M_PI * k / 8.0;
    CHECK(fam.dirs[static_cast<size_t>(k)][0] == doctest::Approx(std::cos(phi)));
    CHECK(fam.dirs[static_cast<size_t>(k)][1] == doctest::Approx(std::sin(phi)));
  }
  CHECK(fam.dir_weight == doctest::Approx(2.0 * M_PI / 8.0));
  CHECK_FALSE(fam.degenerate);

  // Degenerate s-range is flagged.
  spec.s_max = spec.s_min;
  CHECK(build_ray_family(mink, spec).degenerate);
  spec.s_max = 1.0;
  spec.direction_count = 1;
  CHECK_THROWS_AS(build_ray_family(mink, spec), invalid_input_error);

  // Seeded directions are h-unit on curved slices.
  const SpacetimeMetric bump = make_static_bump(2, 0.3, 1.0);
  for (double zx : {-0.7, 0.0, 0.4})
    for (int k = 0; k < 8; ++k) {
      VecN theta, xi;
      const VecN z(zx, 0.2);
      seed_null_covector(bump, 0.0, z, fam.dirs[static_cast<size_t>(k)], theta, xi);
      const MatN h = bump.h(0.0, z);
      CHECK(std::abs(dot(theta, matvec(h, theta)) - 1.0) < 1e-12);
    }
}

TEST_CASE("forward reproduces the Gaussian line-integral oracle") {
  const SpacetimeMetric mink = make_minkowski(2);
  const double expect = std::sqrt(M_PI / 2.0);  // int exp(-2 s^2) ds

  const GridGeometry g = cube_geom(4.0, 65, 2);
  const GridField f = gaussian_tx(g);
  const RayFamily fam = single_ray_family(mink, 4.0, 0.5 * g.spacing[0]);
  const RayData lf = forward(mink, f, fam);
  const double got = lf.at(0, 0);  // direction (1, 0) from z = 0
  CHECK(std::abs(got - expect) / expect < 5e-3);

  // Zero field maps to zero data.
  GridField zero(g);
  const RayData lz = forward(mink, zero, fam);
  for (double v : lz.values) CHECK(v == 0.0);

  // Halving both grid and ray steps improves at the interpolation order.
  const GridGeometry g2 = cube_geom(4.0, 129, 2);
  const GridField f2 = gaussian_tx(g2);
  const RayFamily fam2 = single_ray_family(mink, 4.0, 0.5 * g2.spacing[0]);
  const double got2 = forward(mink, f2, fam2).at(0, 0);
  const double ratio = std::abs(got - expect) / std::abs(got2 - expect);
  CHECK(ratio >= 3.5);
}

TEST_CASE("disjoint support gives zero within interpolation tolerance") {
  const SpacetimeMetric mink = make_minkowski(2);
  const GridGeometry g = cube_geom(2.0, 49, 2);
  GridField f(g);
  std::size_t idx[4];
  for (std::size_t i = 0; i < f.size(); ++i) {
    unflatten(g, i, idx);
    const double t = g.coord(0, idx[0]);
    const double x = g.coord(1, idx[1]);
    const double y = g.coord(2, idx[2]);
    // Bump far from the ray corridor along (1, e1) from z = (0, 1.5).
    const double d2 = x * x + (y + 1.5) * (y + 1.5);
    f.values[i] = std::exp(-4.0 * t * t) * ((d2 < 0.04) ? std::exp(-d2 * 50.0) : 0.0);
  }
  RayFamilySpec spec;
  spec.z_origin = {0.0, 1.5};
  spec.z_spacing = {1.0, 1.0};
  spec.z_dims = {1, 1};
  spec.direction_count = 4;
  spec.s_min = -2.0;
  spec.s_max = 2.0;
  const RayFamily fam = build_ray_family(mink, spec);
  const RayData lf = forward(mink, f, fam);
  CHECK(std::abs(lf.at(0, 0)) < 1e-12);
}

TEST_CASE("forward is linear to machine precision") {
  const SpacetimeMetric mink = make_minkowski(2);
  const GridGeometry g = cube_geom(1.5, 25, 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridField f(g), h(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.values[i] = u(rng);
    h.values[i] = u(rng);
  }
  RayFamilySpec spec;
  spec.z_origin = {-1.0, -1.0};
  spec.z_spacing = {0.25, 0.25};
  spec.z_dims = {9, 9};
  spec.direction_count = 8;
  spec.s_min = -1.5;
  spec.s_max = 1.5;
  const RayFamily fam = build_ray_family(mink, spec);

  const double alpha = 1.7, beta = -0.3;
  GridField comb(g);
  for (std::size_t i = 0; i < comb.size(); ++i)
    comb.values[i] = alpha * f.values[i] + beta * h.values[i];
  const RayData l_comb = forward(mink, comb, fam);
  const RayData lf = forward(mink, f, fam);
  const RayData lh = forward(mink, h, fam);
  double worst = 0.0;
  for (std::size_t r = 0; r < l_comb.size(); ++r) {
    const double want = alpha * lf.values[r] + beta * lh.values[r];
    worst = std::max(worst, std::abs(l_comb.values[r] - want));
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("translation equivariance on matching grids is exact") {
  const SpacetimeMetric mink = make_minkowski(2);
  const GridGeometry g = cube_geom(1.5, 25, 2);  // spacing 0.125, binary exact
  GridField f(g);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Interior support so the two-cell shift loses nothing at the boundary.
  std::size_t idx[4];
  for (std::size_t i = 0; i < f.size(); ++i) {
    unflatten(g, i, idx);
    bool interior = true;
    for (int a = 0; a < 3; ++a)
      if (idx[a] < 4 || idx[a] + 4 >= g.dims[static_cast<size_t>(a)]) interior = false;
    f.values[i] = interior ? u(rng) : 0.0;
  }

  // Shift f by two cells along x1.
  GridField fs(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    unflatten(g, i, idx);
    if (idx[1] >= 2) {
      std::size_t src[4] = {idx[0], idx[1] - 2, idx[2], 0};
      fs.values[i] = f.values[flat_index(g, src)];
    }
  }

  RayFamilySpec spec;
  spec.z_origin = {-1.0, -1.0};
  spec.z_spacing = {0.125, 0.125};
  spec.z_dims = {17, 17};
  spec.direction_count = 6;
  spec.s_min = -1.5;
  spec.s_max = 1.5;
  const RayFamily fam = build_ray_family(mink, spec);
  const RayData lf = forward(mink, f, fam);
  const RayData lfs = forward(mink, fs, fam);
  // Ray data shifts by two base cells along z1; sample positions agree up
  // to rounding of the shifted coordinates, so the match is at the ulp
  // level rather than bitwise.
  double worst = 0.0;
  for (std::size_t i1 = 2; i1 < 17; ++i1)
    for (std::size_t i2 = 0; i2 < 17; ++i2)
      for (std::size_t k = 0; k < 6; ++k)
        worst = std::max(worst, std::abs(lfs.at(i1 * 17 + i2, k) -
                                         lf.at((i1 - 2) * 17 + i2, k)));
  CHECK(worst <= 1e-12);
}

TEST_CASE("discrete adjoint identity at 1e-12 over random pairs") {
  for (const bool curved : {false, true}) {
    const SpacetimeMetric m =
        curved ? make_static_bump(2, 0.2, 1.0) : make_minkowski(2);
    const GridGeometry g = cube_geom(1.5, 21, 2);
    RayFamilySpec spec;
    spec.z_origin = {-1.2, -1.2};
    spec.z_spacing = {0.3, 0.3};
    spec.z_dims = {9, 9};
    spec.direction_count = 10;
    spec.s_min = -1.5;
    spec.s_max = 1.5;
    const RayFamily fam = build_ray_family(m, spec);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int pair = 0; pair < (curved ? 3 : 20); ++pair) {
      GridField f(g);
      for (double& v : f.values) v = u(rng);
      RayData w;
      w.num_bases = fam.num_bases();
      w.num_dirs = fam.dirs.size();
      w.values.resize(fam.num_rays());
      for (double& v : w.values) v = u(rng);

      const RayData lf = forward(m, f, fam);
      const GridField ltw = adjoint(m, w, fam, g, AdjointMode::Discrete);
      const double lhs = ray_inner(m, fam, lf, w);
      const double rhs = grid_inner(m, f, ltw);
      double nlf = std::sqrt(ray_inner(m, fam, lf, lf));
      double nw = std::sqrt(ray_inner(m, fam, w, w));
      if (nlf == 0.0) nlf = 1.0;
      CHECK(std::abs(lhs - rhs) / (nlf * nw) <= 1e-12);
    }
  }
}

TEST_CASE("analytic adjoint of constant data is the sphere measure") {
  // Minkowski n = 2: L^t(c) = 2 pi c at points whose backtraces stay inside
  // the base grid.
  const SpacetimeMetric mink = make_minkowski(2);
  RayFamilySpec spec;
  spec.z_origin = {-3.0, -3.0};
  spec.z_spacing = {0.25, 0.25};
  spec.z_dims = {25, 25};
  spec.direction_count = 32;
  spec.s_min = -2.0;
  spec.s_max = 2.0;
  const RayFamily fam = build_ray_family(mink, spec);
  RayData c;
  c.num_bases = fam.num_bases();
  c.num_dirs = fam.dirs.size();
  c.values.assign(fam.num_rays(), 0.7);

  GridGeometry out = cube_geom(1.0, 9, 2);
  const GridField bp = adjoint(mink, c, fam, out, AdjointMode::Analytic);
  for (std::size_t i = 0; i < bp.size(); ++i)
    CHECK(bp.values[i] == doctest::Approx(0.7 * 2.0 * M_PI).epsilon(1e-12));

  // Zero data backprojects to zero.
  RayData zero = c;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  const GridField z = adjoint(mink, zero, fam, out, AdjointMode::Analytic);
  for (double v : z.values) CHECK(v == 0.0);

  // Static slice, n = 2: the h-sphere fiber measure is still 2 pi.
  const SpacetimeMetric bump = make_static_bump(2, 0.25, 1.0);
  const RayFamily fam_b = build_ray_family(bump, spec);
  RayData cb = c;
  const GridField bpb = adjoint(bump, cb, fam_b, out, AdjointMode::Analytic);
  for (std::size_t i = 0; i < bpb.size(); i += 7)
    CHECK(bpb.values[i] == doctest::Approx(0.7 * 2.0 * M_PI).epsilon(1e-6));
}

TEST_CASE("normal_compose is symmetric positive semidefinite") {
  const SpacetimeMetric mink = make_minkowski(2);
  const GridGeometry g = cube_geom(1.5, 17, 2);
  RayFamilySpec spec;
  spec.z_origin = {-1.2, -1.2};
  spec.z_spacing = {0.4, 0.4};
  spec.z_dims = {7, 7};
  spec.direction_count = 8;
  spec.s_min = -1.5;
  spec.s_max = 1.5;
  const RayFamily fam = build_ray_family(mink, spec);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridField f(g), h(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.values[i] = u(rng);
    h.values[i] = u(rng);
  }
  const GridField nf = normal_compose(mink, f, fam);
  const GridField nh = normal_compose(mink, h, fam);
  const RayData lf = forward(mink, f, fam);

  const double quad = grid_inner(mink, nf, f);
  CHECK(quad >= 0.0);
  CHECK(quad == doctest::Approx(ray_inner(mink, fam, lf, lf)).epsilon(1e-12));
  CHECK(grid_inner(mink, nf, h) == doctest::Approx(grid_inner(mink, f, nh)).epsilon(1e-10));

  GridField zero(g);
  const GridField nz = normal_compose(mink, zero, fam);
  for (double v : nz.values) CHECK(v == 0.0);
}

TEST_CASE("adjoint validates shapes and modes") {
  const SpacetimeMetric mink = make_minkowski(2);
  const GridGeometry g = cube_geom(1.0, 9, 2);
  RayFamilySpec spec;
  spec.z_origin = {-1.0, -1.0};
  spec.z_spacing = {0.5, 0.5};
  spec.z_dims = {5, 5};
  spec.direction_count = 4;
  spec.s_min = -1.0;
  spec.s_max = 1.0;
  const RayFamily fam = build_ray_family(mink, spec);
  RayData bad;
  bad.num_bases = 3;
  bad.num_dirs = 4;
  bad.values.assign(12, 0.0);
  CHECK_THROWS_AS(adjoint(mink, bad, fam, g), invalid_input_error);

  const SpacetimeMetric gh = make_gh_bump(2, 0.1, 1.0);
  const RayFamily fam_gh = build_ray_family(gh, spec);
  RayData ok;
  ok.num_bases = fam_gh.num_bases();
  ok.num_dirs = fam_gh.dirs.size();
  ok.values.assign(fam_gh.num_rays(), 1.0);
  CHECK_THROWS_AS(adjoint(gh, ok, fam_gh, g, AdjointMode::Analytic), unsupported_error);
}

TEST_CASE("upsampled compose pair: exact transpose and reduced attenuation") {
  const SpacetimeMetric mink = make_minkowski(2);
  const GridGeometry g = cube_geom(1.5, 25, 2);
  RayFamilySpec spec;
  spec.z_origin = {-1.5, -1.5};
  spec.z_spacing = {0.125, 0.125};
  spec.z_dims = {25, 25};
  spec.direction_count = 12;
  spec.s_min = -1.5;
  spec.s_max = 1.5;
  spec.ds = 0.125;
  const RayFamily fam = build_ray_family(mink, spec);

  // Transpose identity of the wrapped pair on random band-limited data.
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    GridField f(g);
    for (double& v : f.values) v = u(rng);
    RayData w;
    w.num_bases = fam.num_bases();
    w.num_dirs = fam.dirs.size();
    w.values.resize(fam.num_rays());
    for (double& v : w.values) v = u(rng);

    const GridField fine = fourier_upsample_spatial(f, 2);
    const RayData lf = forward(mink, fine, fam);
    const GridField bp_fine = adjoint(mink, w, fam, fine.geom);
    const GridField bp = fourier_downsample_spatial(bp_fine, 2);
    const double lhs = ray_inner(mink, fam, lf, w);
    const double rhs = grid_inner(mink, f, bp);
    double nlf = std::sqrt(ray_inner(mink, fam, lf, lf));
    double nw = std::sqrt(ray_inner(mink, fam, w, w));
    if (nlf == 0.0) nlf = 1.0;
    CHECK(std::abs(lhs - rhs) / (nlf * nw) <= 1e-12);
  }

  // Down(Up(f)) restores band-limited fields.
  BandLimitSpec bl;
  bl.lambda_lo = 3.0;
  bl.lambda_hi = 6.0;
  bl.window_radius = 0.6;
  bl.window_radius_t = 0.5;
  bl.seed = 73;
  const GridField fb = make_bandlimited_field(g, bl);
  const GridField round = fourier_downsample_spatial(fourier_upsample_spatial(fb, 2), 2);
  const GridField rdiff = round - fb;
  CHECK(rdiff.norm2() <= 1e-12 * fb.norm2());
}
