#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lrtk/errors.hpp"

namespace lrtk {

// Uniform sampling box in (t, x); axis 0 is always time. Values are stored
// row-major with axis 0 slowest.
struct GridGeometry {
  std::vector<double> origin;
  std::vector<double> spacing;
  std::vector<std::size_t> dims;

  int axes() const { return static_cast<int>(dims.size()); }
  int spatial_dim() const { return axes() - 1; }

  std::size_t size() const {
    std::size_t s = 1;
    for (auto d : dims) s *= d;
    return s;
  }

  double cell_volume() const {
    double v = 1.0;
    for (double s : spacing) v *= s;
    return v;
  }

  double coord(int axis, std::size_t i) const {
    return origin[static_cast<size_t>(axis)] + spacing[static_cast<size_t>(axis)] * static_cast<double>(i);
  }

  double extent(int axis) const {
    return spacing[static_cast<size_t>(axis)] * static_cast<double>(dims[static_cast<size_t>(axis)] - 1);
  }

  void validate() const {
    if (dims.size() < 2 || dims.size() != origin.size() || dims.size() != spacing.size())
      throw invalid_input_error("grid: inconsistent axis counts");
    for (double s : spacing)
      if (!(s > 0.0)) throw invalid_input_error("grid: spacings must be positive");
    for (auto d : dims)
      if (d < 2) throw invalid_input_error("grid: dims must be >= 2");
  }

  bool same_shape(const GridGeometry& o) const {
    return dims == o.dims && origin == o.origin && spacing == o.spacing;
  }
};

// The universal function carrier: a real field sampled on a GridGeometry.
// `support_margin` is the claimed compact-support margin in cells (0 = no
// claim); when set, the outer margin cells must be zero.
struct GridField {
  GridGeometry geom;
  std::vector<double> values;
  int support_margin = 0;

  GridField() = default;
  explicit GridField(GridGeometry g) : geom(std::move(g)) {
    geom.validate();
    values.assign(geom.size(), 0.0);
  }

  std::size_t size() const { return values.size(); }

  double& at(std::size_t flat) { return values[flat]; }
  double at(std::size_t flat) const { return values[flat]; }

  // Multilinear interpolation at a physical point; zero outside the box.
  double sample(const double* point) const;

  double norm2() const;            // sqrt(sum v^2 * cell_volume)
  double dot(const GridField& o) const;  // sum v w * cell_volume

  void check_support_margin(double tol = 0.0) const;

  // Physical bounding box of the claimed support (box shrunk by margin cells).
  void support_box(double* lo, double* hi) const;
};

// Flat index helpers.
inline std::size_t flat_index(const GridGeometry& g, const std::size_t* idx) {
  std::size_t f = 0;
  for (int a = 0; a < g.axes(); ++a) f = f * g.dims[static_cast<size_t>(a)] + idx[a];
  return f;
}

inline void unflatten(const GridGeometry& g, std::size_t flat, std::size_t* idx) {
  for (int a = g.axes() - 1; a >= 0; --a) {
    idx[a] = flat % g.dims[static_cast<size_t>(a)];
    flat /= g.dims[static_cast<size_t>(a)];
  }
}

GridField operator+(const GridField& a, const GridField& b);
GridField operator-(const GridField& a, const GridField& b);
GridField operator*(double s, GridField a);

// Relative L2 discrepancy ||a-b|| / max(||a||,||b||) over the interior
// obtained by cropping `margin_cells` from every axis.
double rel_l2_interior(const GridField& a, const GridField& b, std::size_t margin_cells);

} // namespace lrtk
