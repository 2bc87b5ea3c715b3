#pragma once

#include <cstdint>
#include <vector>

#include "lrtk/bicharacteristic.hpp"
#include "lrtk/grid.hpp"
#include "lrtk/metric.hpp"

namespace lrtk {

// Discretization of the light-ray manifold: base points z on the {t = 0}
// slice with trapezoid weights, direction samples with sphere weights
// (uniform angles for n = 2, Fibonacci sphere for n = 3), and the common
// arclength sampling of every ray.
struct RayFamily {
  int n = 2;
  // Base-point grid (spatial axes only).
  std::vector<double> z_origin;
  std::vector<double> z_spacing;
  std::vector<std::size_t> z_dims;
  std::vector<double> z_weights;  // trapezoid weights, one per base point

  std::vector<VecN> dirs;     // Euclidean unit directions
  double dir_weight = 0.0;    // |S^{n-1}| / m, uniform
  double s_min = 0.0, s_max = 0.0;
  double ds = 0.0;
  bool degenerate = false;  // zero-extent s-range
  bool normalized_by_metric = false;  // directions h-normalized per base point

  std::size_t num_bases() const {
    std::size_t s = 1;
    for (auto d : z_dims) s *= d;
    return s;
  }
  std::size_t num_rays() const { return num_bases() * dirs.size(); }
  std::size_t num_s_samples() const;

  VecN base_point(std::size_t iz) const;
};

// Values of the transform indexed parallel to the family (base-major,
// direction-minor), with per-ray truncation flags.
struct RayData {
  std::size_t num_bases = 0;
  std::size_t num_dirs = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> truncated;

  std::size_t size() const { return values.size(); }
  double& at(std::size_t iz, std::size_t k) { return values[iz * num_dirs + k]; }
  double at(std::size_t iz, std::size_t k) const { return values[iz * num_dirs + k]; }
};

struct RayFamilySpec {
  std::vector<double> z_origin;
  std::vector<double> z_spacing;
  std::vector<std::size_t> z_dims;
  int direction_count = 16;
  double s_min = -1.0, s_max = 1.0;
  double ds = 0.0;  // 0 = min(spacing)/2 against the target grid at forward time
};

RayFamily build_ray_family(const SpacetimeMetric& metric, const RayFamilySpec& spec);

// Per-ray measure weight (the Liouville measure of the ray manifold under
// the family's quadrature). Shared by the forward pairing and the discrete
// adjoint so the transpose identity is exact.
double ray_weight(const SpacetimeMetric& metric, const RayFamily& fam, std::size_t iz,
                  std::size_t k);

struct ForwardOptions {
  int threads = 1;
  double step_tol = 1e-10;  // bicharacteristic tolerance for curved metrics
  // Fixed-step ray tracing (RK4 at half the sample spacing). Accurate to
  // O(ds^4) against the adaptive path and several times faster; the
  // adaptive integrator remains the default everywhere else.
  bool fast_trace = true;
};

// Discrete light ray transform: for every ray of the family, traces the
// null geodesic (closed form on Minkowski, integrated otherwise) and
// accumulates f along it with multilinear interpolation and trapezoid
// weights in s. Rays that exit the grid while the support box is still
// reachable are flagged truncated and keep their partial integral.
RayData forward(const SpacetimeMetric& metric, const GridField& f, const RayFamily& rays,
                const ForwardOptions& opt = {});

enum class AdjointMode { Discrete, Analytic };

// Discrete mode is the exact transpose of the forward interpolation-
// quadrature matrix with respect to the ray and grid inner products.
// Analytic mode evaluates the backtraced sphere integral directly;
// supported on Minkowski (any n) and standard static slices with n = 2.
GridField adjoint(const SpacetimeMetric& metric, const RayData& u, const RayFamily& rays,
                  const GridGeometry& out_geom, AdjointMode mode = AdjointMode::Discrete,
                  const ForwardOptions& opt = {});

// adjoint(forward(f)); in discrete mode a symmetric positive semidefinite
// grid operator.
GridField normal_compose(const SpacetimeMetric& metric, const GridField& f,
                         const RayFamily& rays, AdjointMode mode = AdjointMode::Discrete,
                         const ForwardOptions& opt = {});

// Composition evaluated against a spatially supersampled copy of f: the
// rays gather on the Fourier-upsampled field and the backprojection is
// spectrally cropped back. This removes most of the multilinear
// attenuation at the top of the band while the wrapped pair remains an
// exact transpose. factor = 1 falls back to normal_compose.
GridField normal_compose_upsampled(const SpacetimeMetric& metric, const GridField& f,
                                   const RayFamily& rays, int factor,
                                   AdjointMode mode = AdjointMode::Discrete,
                                   const ForwardOptions& opt = {});

// Multilinear interpolation of ray data over the base grid at a fixed
// direction index, and over base grid x periodic angle (n = 2 families).
double sample_ray_data(const RayData& u, const RayFamily& fam, const double* z,
                       std::size_t dir_index);
double sample_ray_data_angle(const RayData& u, const RayFamily& fam, const double* z,
                             double phi);

// Inner products entering the adjoint identity.
double ray_inner(const SpacetimeMetric& metric, const RayFamily& fam, const RayData& a,
                 const RayData& b);
double grid_inner(const SpacetimeMetric& metric, const GridField& a, const GridField& b);

// Per-cell measure weights (cell volume times sqrt(det h)); the Minkowski
// fast path returns an empty vector meaning "uniform cell volume".
std::vector<double> grid_measure(const SpacetimeMetric& metric, const GridGeometry& g);

} // namespace lrtk
