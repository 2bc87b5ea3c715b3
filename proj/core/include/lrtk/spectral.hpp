#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "lrtk/grid.hpp"

namespace lrtk {

// Half-spectrum (real-to-complex) coefficients of a zero-padded field.
// Padding cells are appended after the data on every axis, so cropping
// takes the leading block. The last axis is stored reduced to N/2+1 bins.
struct SpectralField {
  GridGeometry padded_geom;            // real-space geometry including padding
  std::vector<std::size_t> pad_cells;  // cells appended per axis
  std::vector<std::complex<double>> coeff;

  std::size_t reduced_last() const {
    return padded_geom.dims.back() / 2 + 1;
  }
  std::size_t coeff_count() const {
    std::size_t s = 1;
    for (std::size_t a = 0; a + 1 < padded_geom.dims.size(); ++a) s *= padded_geom.dims[a];
    return s * reduced_last();
  }
  // Angular frequency of bin j on `axis` (last axis uses j in [0, N/2]).
  double freq(int axis, std::size_t j) const;
  // Frequency bin width on `axis`.
  double bin_width(int axis) const;
};

// Forward transform of f zero-padded by pad_cells per axis.
SpectralField fft_forward(const GridField& f, const std::vector<std::size_t>& pad_cells);

// Inverse transform; returns the padded real field (normalized).
GridField fft_inverse(const SpectralField& sf);

// Crop the leading block of a padded field back onto `target`.
GridField crop_to(const GridField& padded, const GridGeometry& target);

// Multiply the half-spectrum in place by a real, even symbol. The callback
// receives the angular frequency vector (time first) and the per-axis bin
// widths, and must satisfy m(-zeta) = m(zeta) for the output to stay real.
void apply_spectral_symbol(SpectralField& sf,
                           const std::function<double(const double* zeta,
                                                      const double* bin_width,
                                                      int axes)>& symbol);

// Energy of f per dyadic frequency shell [lambda, 2 lambda), optionally
// restricted to a cone of directions around `axis_dir` (unit, length =
// axes) with the given half-angle in radians; pass nullptr for the full
// sphere. Returns shell energies aligned with `band_centers`.
std::vector<double> band_energies(const GridField& f,
                                  const std::vector<double>& band_centers,
                                  const double* axis_dir = nullptr,
                                  double cone_half_angle = 0.0);

// Dyadic band centers fitting the grid: factor-2 spaced starting as high
// as possible while still yielding min_bands shells below the resolved
// range. May return fewer than min_bands on very coarse grids.
std::vector<double> auto_dyadic_bands(const GridGeometry& g, int min_bands = 4);

// Band-exact spatial resampling by zero-padding / cropping the spectrum.
// The time axis is untouched; each spatial axis gains (factor - 1) * N
// cells at the same physical extent. Downsampling is the exact transpose
// (and band-inverse) of upsampling, so a forward/adjoint pair wrapped in
// the two stays an exact transpose pair.
GridField fourier_upsample_spatial(const GridField& f, int factor);
GridField fourier_downsample_spatial(const GridField& f, int factor);

// Least-squares slope of log2(sqrt(E_j)) against log2(lambda_j), with the
// half-width of the 95% confidence interval. Bands with nonpositive energy
// are skipped.
struct SlopeFit {
  double slope = 0.0;
  double confidence = 0.0;
  int bands_used = 0;
};
SlopeFit fit_log_slope(const std::vector<double>& band_centers,
                       const std::vector<double>& energies);

} // namespace lrtk
