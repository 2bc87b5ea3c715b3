#include "lrtk/parametrix.hpp"

#include <cmath>

#include "lrtk/errors.hpp"
#include "lrtk/spectral.hpp"

namespace lrtk {

void ParametrixConfig::validate() const {
  if (n != 2 && n != 3)
    throw unsupported_error("parametrix supports n=2,3");
  // Negative requests the 1/C_n default; an explicit value must be positive.
  if (c_norm == 0.0)
    throw invalid_input_error("parametrix: c_norm must be positive");
}

double ParametrixConfig::resolved_c_norm() const {
  return (c_norm > 0.0) ? c_norm : 1.0 / cone_multiplier_constant(n);
}

namespace {

double smoothstep01(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * (3.0 - 2.0 * u);
}

} // namespace

double symbol_chi_sp(double tau, double xi_norm, double eps_cone, double rho) {
  double ramp;
  const double d = xi_norm - std::abs(tau);
  if (eps_cone > 0.0) {
    ramp = smoothstep01(d / eps_cone);
  } else {
    ramp = (d > 0.0) ? 1.0 : 0.0;
  }
  return ramp * low_frequency_cutoff(xi_norm, rho);
}

double symbol_q(int n, double tau, double xi_norm, double c_norm, double eps_cone,
                double rho) {
  if (n != 2 && n != 3) throw unsupported_error("parametrix supports n=2,3");
  const double s = xi_norm * xi_norm - tau * tau;
  if (s <= 0.0) return 0.0;  // restricted to the space-like cone interior
  const double a = -0.5 * (n - 3);
  const double core = c_norm * std::pow(s, a) * std::pow(xi_norm, n - 2);
  return core * symbol_chi_sp(tau, xi_norm, eps_cone, rho);
}

GridField apply_H(const GridField& f, const ParametrixConfig& cfg,
                  const std::vector<std::size_t>& pad_cells) {
  cfg.validate();
  if (f.geom.spatial_dim() != cfg.n)
    throw invalid_input_error("apply_H: field dimension mismatch");
  validate_padding(f, pad_cells);
  SpectralField sf = fft_forward(f, pad_cells);
  double eps, rho;
  resolve_frequency_cutoffs(cfg.eps_cone, cfg.rho, sf, eps, rho);
  apply_spectral_symbol(sf, [eps, rho](const double* zeta, const double*, int axes) {
    double r2 = 0.0;
    for (int a = 1; a < axes; ++a) r2 += zeta[a] * zeta[a];
    return symbol_chi_sp(zeta[0], std::sqrt(r2), eps, rho);
  });
  return crop_to(fft_inverse(sf), f.geom);
}

GridField apply_Q(const GridField& f, const ParametrixConfig& cfg,
                  const std::vector<std::size_t>& pad_cells) {
  cfg.validate();
  if (f.geom.spatial_dim() != cfg.n)
    throw invalid_input_error("apply_Q: field dimension mismatch");
  validate_padding(f, pad_cells);
  SpectralField sf = fft_forward(f, pad_cells);
  double eps, rho;
  resolve_frequency_cutoffs(cfg.eps_cone, cfg.rho, sf, eps, rho);
  // The guard band doubles relative to H: the inverse symbol amplifies the
  // mollified cone cells, so Q keeps further off the cone.
  const double eps_q = 2.0 * eps;
  const double cn = cfg.resolved_c_norm();
  const int n = cfg.n;
  apply_spectral_symbol(sf, [n, cn, eps_q, rho](const double* zeta, const double*, int axes) {
    double r2 = 0.0;
    for (int a = 1; a < axes; ++a) r2 += zeta[a] * zeta[a];
    return symbol_q(n, zeta[0], std::sqrt(r2), cn, eps_q, rho);
  });
  return crop_to(fft_inverse(sf), f.geom);
}

GridField recover(const SpacetimeMetric& metric, const RayData& u, const RayFamily& rays,
                  const GridGeometry& out_geom, const ParametrixConfig& cfg,
                  const ForwardOptions& fwd_opt) {
  cfg.validate();
  GridField bp = adjoint(metric, u, rays, out_geom, AdjointMode::Discrete, fwd_opt);
  // The backprojection of compactly supported ray data need not vanish near
  // the grid edge; claim no margin and pad by doubling.
  bp.support_margin = 0;
  return apply_Q(bp, cfg, default_pad(out_geom));
}

} // namespace lrtk
