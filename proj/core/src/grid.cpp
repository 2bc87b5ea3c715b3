#include "lrtk/grid.hpp"

#include <cmath>

namespace lrtk {

double GridField::sample(const double* point) const {
  const int d = geom.axes();
  std::size_t base[4];
  double frac[4];
  for (int a = 0; a < d; ++a) {
    const double u = (point[a] - geom.origin[static_cast<size_t>(a)]) / geom.spacing[static_cast<size_t>(a)];
    if (u < 0.0 || u > static_cast<double>(geom.dims[static_cast<size_t>(a)] - 1)) return 0.0;
    double fl = std::floor(u);
    std::size_t i0 = static_cast<std::size_t>(fl);
    if (i0 >= geom.dims[static_cast<size_t>(a)] - 1) {
      i0 = geom.dims[static_cast<size_t>(a)] - 2;
      fl = static_cast<double>(i0);
    }
    base[a] = i0;
    frac[a] = u - fl;
  }
  // Accumulate over the 2^d cell corners.
  double acc = 0.0;
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
      const int hi = (c >> a) & 1;
      w *= hi ? frac[a] : (1.0 - frac[a]);
      flat = flat * geom.dims[static_cast<size_t>(a)] + (base[a] + static_cast<std::size_t>(hi));
    }
    acc += w * values[flat];
  }
  return acc;
}

double GridField::norm2() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s * geom.cell_volume());
}

double GridField::dot(const GridField& o) const {
  if (!geom.same_shape(o.geom)) throw invalid_input_error("grid dot: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * o.values[i];
  return s * geom.cell_volume();
}

void GridField::check_support_margin(double tol) const {
  if (support_margin <= 0) return;
  const int d = geom.axes();
  std::size_t idx[4];
  for (std::size_t f = 0; f < values.size(); ++f) {
    if (values[f] == 0.0) continue;
    unflatten(geom, f, idx);
    for (int a = 0; a < d; ++a) {
      const std::size_t m = static_cast<std::size_t>(support_margin);
      if (idx[a] < m || idx[a] + m >= geom.dims[static_cast<size_t>(a)]) {
        if (std::abs(values[f]) > tol)
          throw invalid_input_error("grid: nonzero value inside claimed support margin");
      }
    }
  }
}

void GridField::support_box(double* lo, double* hi) const {
  const int d = geom.axes();
  for (int a = 0; a < d; ++a) {
    const double m = static_cast<double>(support_margin) * geom.spacing[static_cast<size_t>(a)];
    lo[a] = geom.origin[static_cast<size_t>(a)] + m;
    hi[a] = geom.origin[static_cast<size_t>(a)] + geom.extent(a) - m;
  }
}

GridField operator+(const GridField& a, const GridField& b) {
  if (!a.geom.same_shape(b.geom)) throw invalid_input_error("grid +: shape mismatch");
  GridField r = a;
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] += b.values[i];
  r.support_margin = std::min(a.support_margin, b.support_margin);
  return r;
}

GridField operator-(const GridField& a, const GridField& b) {
  if (!a.geom.same_shape(b.geom)) throw invalid_input_error("grid -: shape mismatch");
  GridField r = a;
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= b.values[i];
  r.support_margin = std::min(a.support_margin, b.support_margin);
  return r;
}

GridField operator*(double s, GridField a) {
  for (double& v : a.values) v *= s;
  return a;
}

double rel_l2_interior(const GridField& a, const GridField& b, std::size_t margin_cells) {
  if (!a.geom.same_shape(b.geom)) throw invalid_input_error("rel_l2_interior: shape mismatch");
  const int d = a.geom.axes();
  std::size_t idx[4];
  double na = 0.0, nb = 0.0, nd = 0.0;
  for (std::size_t f = 0; f < a.values.size(); ++f) {
    unflatten(a.geom, f, idx);
    bool interior = true;
    for (int ax = 0; ax < d; ++ax) {
      if (idx[ax] < margin_cells || idx[ax] + margin_cells >= a.geom.dims[static_cast<size_t>(ax)]) {
        interior = false;
        break;
      }
    }
    if (!interior) continue;
    const double va = a.values[f], vb = b.values[f];
    na += va * va;
    nb += vb * vb;
    nd += (va - vb) * (va - vb);
  }
  const double ref = std::sqrt(std::max(na, nb));
  if (ref == 0.0) return 0.0;
  return std::sqrt(nd) / ref;
}

} // namespace lrtk
