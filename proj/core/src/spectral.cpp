#include "lrtk/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "lrtk/errors.hpp"

namespace lrtk {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct PlanHolder {
  fftw_plan plan = nullptr;
  ~PlanHolder() {
    if (plan) {
      std::lock_guard<std::mutex> lock(plan_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

} // namespace

double SpectralField::freq(int axis, std::size_t j) const {
  const std::size_t n = padded_geom.dims[static_cast<size_t>(axis)];
  double k = static_cast<double>(j);
  if (axis + 1 < padded_geom.axes() && j > n / 2) k -= static_cast<double>(n);
  return 2.0 * M_PI * k / (static_cast<double>(n) * padded_geom.spacing[static_cast<size_t>(axis)]);
}

double SpectralField::bin_width(int axis) const {
  const std::size_t n = padded_geom.dims[static_cast<size_t>(axis)];
  return 2.0 * M_PI / (static_cast<double>(n) * padded_geom.spacing[static_cast<size_t>(axis)]);
}

SpectralField fft_forward(const GridField& f, const std::vector<std::size_t>& pad_cells) {
  const int d = f.geom.axes();
  if (pad_cells.size() != static_cast<std::size_t>(d))
    throw invalid_input_error("fft_forward: one pad count per axis required");

  SpectralField sf;
  sf.pad_cells = pad_cells;
  sf.padded_geom = f.geom;
  for (int a = 0; a < d; ++a) sf.padded_geom.dims[static_cast<size_t>(a)] += pad_cells[static_cast<size_t>(a)];

  const std::size_t real_size = sf.padded_geom.size();
  std::vector<double> in(real_size, 0.0);

  // Copy the field into the leading block of the padded array.
  std::size_t idx[4];
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    unflatten(f.geom, flat, idx);
    std::size_t pf = 0;
    for (int a = 0; a < d; ++a) pf = pf * sf.padded_geom.dims[static_cast<size_t>(a)] + idx[a];
    in[pf] = f.values[flat];
  }

  sf.coeff.assign(sf.coeff_count(), {0.0, 0.0});
  int dims[4];
  for (int a = 0; a < d; ++a) dims[a] = static_cast<int>(sf.padded_geom.dims[static_cast<size_t>(a)]);

  PlanHolder holder;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    holder.plan = fftw_plan_dft_r2c(d, dims, in.data(),
                                    reinterpret_cast<fftw_complex*>(sf.coeff.data()),
                                    FFTW_ESTIMATE);
  }
  if (!holder.plan) throw numerical_error("fft_forward: plan creation failed");
  fftw_execute(holder.plan);
  return sf;
}

GridField fft_inverse(const SpectralField& sf) {
  const int d = sf.padded_geom.axes();
  GridField out(sf.padded_geom);
  int dims[4];
  for (int a = 0; a < d; ++a) dims[a] = static_cast<int>(sf.padded_geom.dims[static_cast<size_t>(a)]);

  // c2r destroys its input, so transform a scratch copy.
  std::vector<std::complex<double>> scratch = sf.coeff;
  PlanHolder holder;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    holder.plan = fftw_plan_dft_c2r(d, dims,
                                    reinterpret_cast<fftw_complex*>(scratch.data()),
                                    out.values.data(), FFTW_ESTIMATE);
  }
  if (!holder.plan) throw numerical_error("fft_inverse: plan creation failed");
  fftw_execute(holder.plan);

  const double scale = 1.0 / static_cast<double>(sf.padded_geom.size());
  for (double& v : out.values) v *= scale;
  return out;
}

GridField crop_to(const GridField& padded, const GridGeometry& target) {
  const int d = target.axes();
  GridField out(target);
  std::size_t idx[4];
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    unflatten(target, flat, idx);
    std::size_t pf = 0;
    for (int a = 0; a < d; ++a) pf = pf * padded.geom.dims[static_cast<size_t>(a)] + idx[a];
    out.values[flat] = padded.values[pf];
  }
  return out;
}

void apply_spectral_symbol(SpectralField& sf,
                           const std::function<double(const double*, const double*, int)>& symbol) {
  const int d = sf.padded_geom.axes();
  double binw[4];
  for (int a = 0; a < d; ++a) binw[a] = sf.bin_width(a);

  const std::size_t last = sf.reduced_last();
  std::size_t outer = 1;
  for (int a = 0; a + 1 < d; ++a) outer *= sf.padded_geom.dims[static_cast<size_t>(a)];

  std::size_t idx[4] = {0, 0, 0, 0};
  double zeta[4];
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t rem = o;
    for (int a = d - 2; a >= 0; --a) {
      idx[a] = rem % sf.padded_geom.dims[static_cast<size_t>(a)];
      rem /= sf.padded_geom.dims[static_cast<size_t>(a)];
    }
    for (int a = 0; a + 1 < d; ++a) zeta[a] = sf.freq(a, idx[a]);
    const std::size_t base = o * last;
    for (std::size_t k = 0; k < last; ++k) {
      zeta[d - 1] = sf.freq(d - 1, k);
      sf.coeff[base + k] *= symbol(zeta, binw, d);
    }
  }
}

std::vector<double> band_energies(const GridField& f,
                                  const std::vector<double>& band_centers,
                                  const double* axis_dir, double cone_half_angle) {
  const int d = f.geom.axes();
  std::vector<std::size_t> nopad(static_cast<std::size_t>(d), 0);
  SpectralField sf = fft_forward(f, nopad);

  double dir[4] = {0, 0, 0, 0};
  double dir_norm = 0.0;
  if (axis_dir) {
    for (int a = 0; a < d; ++a) dir[a] = axis_dir[a];
    for (int a = 0; a < d; ++a) dir_norm += dir[a] * dir[a];
    dir_norm = std::sqrt(dir_norm);
  }
  const double cos_cone = std::cos(cone_half_angle);

  std::vector<double> energy(band_centers.size(), 0.0);
  const std::size_t last = sf.reduced_last();
  const std::size_t n_last = sf.padded_geom.dims.back();
  std::size_t outer = 1;
  for (int a = 0; a + 1 < d; ++a) outer *= sf.padded_geom.dims[static_cast<size_t>(a)];

  std::size_t idx[4] = {0, 0, 0, 0};
  double zeta[4];
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t rem = o;
    for (int a = d - 2; a >= 0; --a) {
      idx[a] = rem % sf.padded_geom.dims[static_cast<size_t>(a)];
      rem /= sf.padded_geom.dims[static_cast<size_t>(a)];
    }
    for (int a = 0; a + 1 < d; ++a) zeta[a] = sf.freq(a, idx[a]);
    const std::size_t base = o * last;
    for (std::size_t k = 0; k < last; ++k) {
      zeta[d - 1] = sf.freq(d - 1, k);
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += zeta[a] * zeta[a];
      const double r = std::sqrt(r2);
      if (r == 0.0) continue;

      if (axis_dir && dir_norm > 0.0) {
        double c = 0.0;
        for (int a = 0; a < d; ++a) c += zeta[a] * dir[a];
        c = std::abs(c) / (r * dir_norm);  // one cone per +/- direction pair
        if (c < cos_cone) continue;
      }

      // Conjugate-pair double counting: bins strictly inside the reduced
      // axis represent two frequencies.
      const double mult = (k == 0 || (n_last % 2 == 0 && k == n_last / 2)) ? 1.0 : 2.0;
      const double e = std::norm(sf.coeff[base + k]) * mult;

      for (std::size_t b = 0; b < band_centers.size(); ++b) {
        if (r >= band_centers[b] && r < 2.0 * band_centers[b]) {
          energy[b] += e;
          break;
        }
      }
    }
  }
  // Parseval normalization to physical units (constant across bands).
  const double cell = f.geom.cell_volume() / static_cast<double>(f.geom.size());
  for (double& e : energy) e *= cell;
  return energy;
}

std::vector<double> auto_dyadic_bands(const GridGeometry& g, int min_bands) {
  double lmin = 0.0;
  for (int a = 0; a < g.axes(); ++a) lmin = std::max(lmin, 2.0 * M_PI / g.extent(a));
  double nyq = 1e300;
  for (int a = 0; a < g.axes(); ++a)
    nyq = std::min(nyq, M_PI / g.spacing[static_cast<size_t>(a)]);
  // Prefer to start well above the box scale; fall back toward it until the
  // requested number of octaves fits under the resolved range.
  std::vector<double> bands;
  for (double start_mult : {4.0, 3.0, 2.5, 2.0}) {
    bands.clear();
    for (double lam = start_mult * lmin; lam <= 0.55 * nyq; lam *= 2.0)
      bands.push_back(lam);
    if (static_cast<int>(bands.size()) >= min_bands) break;
  }
  return bands;
}

namespace {

// Shared bin remap between the coarse and fine spectra. Coarse Nyquist
// planes are dropped on both paths so the two maps stay exact transposes.
struct ResampleMap {
  GridGeometry coarse, fine;
  int factor;

  bool map_index(const std::size_t* jc, std::size_t* jf) const {
    const int d = coarse.axes();
    for (int a = 0; a < d; ++a) {
      const std::size_t nc = coarse.dims[static_cast<size_t>(a)];
      const std::size_t nf = fine.dims[static_cast<size_t>(a)];
      if (a == 0 || nc == nf) {
        jf[a] = jc[a];
        continue;
      }
      if (a + 1 == d) {  // reduced axis: nonnegative frequencies only
        if (nc % 2 == 0 && jc[a] == nc / 2) return false;
        jf[a] = jc[a];
        continue;
      }
      if (nc % 2 == 0 && jc[a] == nc / 2) return false;
      jf[a] = (jc[a] <= nc / 2) ? jc[a] : jc[a] + (nf - nc);
    }
    return true;
  }
};

GridGeometry scaled_spatial_geom(const GridGeometry& g, int factor, bool up) {
  GridGeometry out = g;
  for (int a = 1; a < g.axes(); ++a) {
    if (up) {
      out.dims[static_cast<size_t>(a)] *= static_cast<std::size_t>(factor);
      out.spacing[static_cast<size_t>(a)] /= factor;
    } else {
      if (out.dims[static_cast<size_t>(a)] % static_cast<std::size_t>(factor) != 0)
        throw invalid_input_error("fourier_downsample: dims not divisible by factor");
      out.dims[static_cast<size_t>(a)] /= static_cast<std::size_t>(factor);
      out.spacing[static_cast<size_t>(a)] *= factor;
    }
  }
  return out;
}

} // namespace

GridField fourier_upsample_spatial(const GridField& f, int factor) {
  if (factor <= 1) return f;
  const int d = f.geom.axes();
  const GridGeometry fine = scaled_spatial_geom(f.geom, factor, true);
  std::vector<std::size_t> nopad(static_cast<size_t>(d), 0);
  const SpectralField in = fft_forward(f, nopad);

  SpectralField out;
  out.padded_geom = fine;
  out.pad_cells.assign(static_cast<size_t>(d), 0);
  out.coeff.assign(out.coeff_count(), {0.0, 0.0});

  ResampleMap map{f.geom, fine, factor};
  const double scale = std::pow(static_cast<double>(factor), d - 1);
  const std::size_t last_c = in.reduced_last();
  const std::size_t last_f = out.reduced_last();
  std::size_t outer = 1;
  for (int a = 0; a + 1 < d; ++a) outer *= f.geom.dims[static_cast<size_t>(a)];
  std::size_t jc[4], jf[4];
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t rem = o;
    for (int a = d - 2; a >= 0; --a) {
      jc[a] = rem % f.geom.dims[static_cast<size_t>(a)];
      rem /= f.geom.dims[static_cast<size_t>(a)];
    }
    for (std::size_t k = 0; k < last_c; ++k) {
      jc[d - 1] = k;
      if (!map.map_index(jc, jf)) continue;
      std::size_t flat = 0;
      for (int a = 0; a + 1 < d; ++a)
        flat = flat * fine.dims[static_cast<size_t>(a)] + jf[a];
      flat = flat * last_f + jf[d - 1];
      out.coeff[flat] = in.coeff[o * last_c + k] * scale;
    }
  }
  GridField result = fft_inverse(out);
  result.support_margin = f.support_margin * factor;
  return result;
}

GridField fourier_downsample_spatial(const GridField& f, int factor) {
  if (factor <= 1) return f;
  const int d = f.geom.axes();
  const GridGeometry coarse = scaled_spatial_geom(f.geom, factor, false);
  std::vector<std::size_t> nopad(static_cast<size_t>(d), 0);
  const SpectralField in = fft_forward(f, nopad);

  SpectralField out;
  out.padded_geom = coarse;
  out.pad_cells.assign(static_cast<size_t>(d), 0);
  out.coeff.assign(out.coeff_count(), {0.0, 0.0});

  ResampleMap map{coarse, f.geom, factor};
  const double scale = 1.0 / std::pow(static_cast<double>(factor), d - 1);
  const std::size_t last_c = out.reduced_last();
  const std::size_t last_f = in.reduced_last();
  std::size_t outer = 1;
  for (int a = 0; a + 1 < d; ++a) outer *= coarse.dims[static_cast<size_t>(a)];
  std::size_t jc[4], jf[4];
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t rem = o;
    for (int a = d - 2; a >= 0; --a) {
      jc[a] = rem % coarse.dims[static_cast<size_t>(a)];
      rem /= coarse.dims[static_cast<size_t>(a)];
    }
    for (std::size_t k = 0; k < last_c; ++k) {
      jc[d - 1] = k;
      if (!map.map_index(jc, jf)) continue;
      std::size_t flat = 0;
      for (int a = 0; a + 1 < d; ++a)
        flat = flat * f.geom.dims[static_cast<size_t>(a)] + jf[a];
      flat = flat * last_f + jf[d - 1];
      std::size_t oflat = 0;
      for (int a = 0; a + 1 < d; ++a)
        oflat = oflat * coarse.dims[static_cast<size_t>(a)] + jc[a];
      out.coeff[oflat * last_c + k] = in.coeff[flat] * scale;
    }
  }
  GridField result = fft_inverse(out);
  result.support_margin = f.support_margin / factor;
  return result;
}

SlopeFit fit_log_slope(const std::vector<double>& band_centers,
                       const std::vector<double>& energies) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < band_centers.size(); ++i) {
    if (energies[i] > 0.0 && band_centers[i] > 0.0) {
      xs.push_back(std::log2(band_centers[i]));
      ys.push_back(0.5 * std::log2(energies[i]));  // amplitude-scale slope
    }
  }
  SlopeFit fit;
  fit.bands_used = static_cast<int>(xs.size());
  if (xs.size() < 2) throw numerical_error("fit_log_slope: need at least two usable bands");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-12) throw numerical_error("fit_log_slope: collinear abscissae");
  fit.slope = (n * sxy - sx * sy) / den;
  const double intercept = (sy - fit.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  if (xs.size() > 2) {
    const double se = std::sqrt(ss / (n - 2.0) * n / den);
    fit.confidence = 1.96 * se;
  }
  return fit;
}

} // namespace lrtk
