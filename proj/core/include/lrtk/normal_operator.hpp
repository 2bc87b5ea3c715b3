#pragma once

#include <complex>
#include <string>
#include <vector>

#include "lrtk/grid.hpp"
#include "lrtk/metric.hpp"
#include "lrtk/ray_transform.hpp"
#include "lrtk/spectral.hpp"

namespace lrtk {

// C_n = 2 pi |S^{n-2}|: 4 pi for n = 2, 4 pi^2 for n = 3.
double cone_multiplier_constant(int n);

// Pointwise multiplier of the normal operator:
//   k(tau, xi) = C_n (|xi|^2 - tau^2)_+^{(n-3)/2} / |xi|^{n-2}.
// Vanishes on time-like covectors. For n = 2 the exponent is -1/2 and the
// cone value is regularized by clamping the cone distance at eps_cone.
double multiplier_k(int n, double tau, const double* xi, double eps_cone = 0.0);
double multiplier_k_radial(int n, double tau, double xi_norm, double eps_cone = 0.0);

// Frequency-side description of a multiplier operator: cone guard band,
// low-frequency cutoff, and smoothing profile (fixed smoothstep shape).
struct MultiplierSymbol {
  int n = 2;
  double eps_cone = -1.0;  // frequency units; negative = 2 frequency bins
  double rho = -1.0;       // low-frequency cutoff radius; negative = 2 bins
};

// Smooth low-frequency cutoff: 0 for |xi| <= rho/2, 1 for |xi| >= rho.
double low_frequency_cutoff(double xi_norm, double rho);

// Resolves "negative means auto" cutoff requests against a padded grid:
// auto eps_cone is two time-frequency bins, auto rho two spatial bins.
void resolve_frequency_cutoffs(double eps_in, double rho_in, const SpectralField& sf,
                               double& eps_out, double& rho_out);

// Applies the normal-operator multiplier by zero-padded FFT. Frequency
// cells within eps_cone of the light cone get analytically cell-averaged
// symbol values across the cell (exact integral of the cone singularity),
// which realizes the mollification. Throws on insufficient padding.
GridField apply_multiplier(const GridField& f, const MultiplierSymbol& m,
                           const std::vector<std::size_t>& pad_cells);

// Generic padded-FFT multiplier with a caller-supplied real even symbol
// (tau, xi, n) -> value; the machinery behind apply_multiplier, exposed for
// identity checks and custom filters.
GridField apply_custom_multiplier(
    const GridField& f,
    const std::function<double(double tau, const double* xi, int n)>& symbol,
    const std::vector<std::size_t>& pad_cells);

// Per-axis padding that always suffices (full size doubling).
std::vector<std::size_t> default_pad(const GridGeometry& g);

// Validates a padding request against the field's claimed support margin;
// the physical pad on every axis must cover the reach of the cone kernel,
// i.e. the time extent of the support box.
void validate_padding(const GridField& f, const std::vector<std::size_t>& pad_cells);

enum class AProfileMode { Quadrature, ClosedN3 };

// Partial Fourier profile of the multiplier across the cone:
//   A(sigma, r) = 2^{n-2} C_n int_0^1 e^{-2 i sigma r s} s^a (1-s)^a ds,
// a = (n-3)/2. Quadrature mode integrates with a Gauss-Jacobi rule matched
// to the endpoint exponents; ClosedN3 evaluates the n = 3 closed form
// C_3 (1 - e^{-2 i sigma r}) / (i sigma r), with the removable value 2 C_3
// at sigma = 0.
std::complex<double> a_profile(int n, double sigma, double r,
                               AProfileMode mode = AProfileMode::Quadrature,
                               int quadrature_order = 64);

struct KernelApplyOptions {
  double delta_width = 0.0;   // time mollifier width; 0 = 2 * dt
  int output_stride = 1;      // evaluate every k-th output point per axis
  int threads = 1;
  int fan_directions = 0;     // curved path; 0 = auto
  double sigma_sample = 0.0;  // curved path radial step; 0 = min spacing / 2
  bool check_conjugates = true;
};

// Normal operator through its singular kernel: for every output (t, y)
// accumulates [f(t + d, x) + f(t - d, x)] J(x,y) / d^{n-1} over the
// h-volume, with the time delta mollified to a normalized hat. Flat slices
// use the closed-form distance with the center cell handled by exact polar
// integration of the innermost shell; curved static slices evaluate the
// same integral in geodesic polar coordinates (the polar-cell treatment
// extended to every shell), where J / d^{n-1} cancels exactly against the
// volume element. Output points skipped by `output_stride` are zero.
GridField kernel_apply_static(const SpacetimeMetric& metric, const GridField& f,
                              const KernelApplyOptions& opt = {});

enum class Realization { Multiplier, Kernel, Compose };

struct CrossValidationReport {
  std::vector<std::string> names;
  struct Pair {
    std::string a, b;
    double rel_l2 = 0.0;
    std::vector<double> band_rel;  // aligned with band_centers; empty if strided
  };
  std::vector<Pair> pairs;
  std::vector<double> band_centers;
  double measured_constant_ratio = 0.0;  // <Nf, f> compose / multiplier
  std::vector<double> runtime_seconds;   // aligned with names
  double eps_cone = 0.0, rho = 0.0;
  int kernel_stride = 1;
  std::size_t interior_margin = 0;
};

struct CrossValidateOptions {
  KernelApplyOptions kernel;
  std::size_t interior_margin = 4;
  std::vector<double> band_centers;  // empty = auto dyadic
  int threads = 1;
  int compose_upsample = 1;  // spatial supersampling for the compose route
  MultiplierSymbol multiplier;  // n is overwritten from the metric
};

// Runs the requested realizations of N on f and reports pairwise relative
// L2 discrepancies on the interior grid plus per-dyadic-band discrepancies.
// Requires at least two applicable realizations for the metric kind.
CrossValidationReport cross_validate(const SpacetimeMetric& metric, const GridField& f,
                                     const std::vector<Realization>& realizations,
                                     const RayFamily* rays = nullptr,
                                     const CrossValidateOptions& opt = {});

} // namespace lrtk
