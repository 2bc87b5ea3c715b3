#pragma once

#include "lrtk/grid.hpp"
#include "lrtk/normal_operator.hpp"
#include "lrtk/ray_transform.hpp"

namespace lrtk {

// Configuration of the cone-restricted identity H and the inverse
// multiplier Q. The normalization c_norm is pinned so that the symbol
// product q * k equals the space-like indicator pointwise (c_norm = 1/C_n);
// H rather than the full identity is the best target reachable from
// light-ray data, since the normal operator annihilates time-like content.
struct ParametrixConfig {
  int n = 2;               // 2 or 3
  double eps_cone = -1.0;  // negative = two time-frequency bins
  double rho = -1.0;       // negative = two spatial-frequency bins
  double c_norm = -1.0;    // negative = 1 / C_n

  void validate() const;
  double resolved_c_norm() const;
};

// Pure symbol evaluators (no cutoffs when eps_cone = rho = 0).
double symbol_chi_sp(double tau, double xi_norm, double eps_cone, double rho);
double symbol_q(int n, double tau, double xi_norm, double c_norm, double eps_cone,
                double rho);

// Fourier multiplier by the smoothed space-like indicator.
GridField apply_H(const GridField& f, const ParametrixConfig& cfg,
                  const std::vector<std::size_t>& pad_cells);

// Fourier multiplier by c_norm (|xi|^2 - tau^2)_+^{-(n-3)/2} |xi|^{n-2}
// restricted to the space-like cone interior. The cone guard band is twice
// the one used for H and the normal operator symbol. n must be 2 or 3.
GridField apply_Q(const GridField& f, const ParametrixConfig& cfg,
                  const std::vector<std::size_t>& pad_cells);

// Recovery pipeline A = Q after backprojection: apply_Q(adjoint(u)).
// The output approximates H f when u = forward(f); accuracy is claimed
// against H f only (time-like and light-like content carries no guarantee).
GridField recover(const SpacetimeMetric& metric, const RayData& u, const RayFamily& rays,
                  const GridGeometry& out_geom, const ParametrixConfig& cfg,
                  const ForwardOptions& fwd_opt = {});

} // namespace lrtk
