#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "lrtk/errors.hpp"

namespace lrtk {

// Fixed-capacity vectors/matrices for spatial dimension n <= 3.
// All experiments run on n = 2 or n = 3 slices, so a capacity-3 value type
// avoids heap traffic in the ODE right-hand sides.

inline constexpr int kMaxDim = 3;

struct VecN {
  int n = 0;
  std::array<double, kMaxDim> v{};

  VecN() = default;
  explicit VecN(int dim) : n(dim) {}
  VecN(double a, double b) : n(2), v{a, b, 0.0} {}
  VecN(double a, double b, double c) : n(3), v{a, b, c} {}

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }

  VecN& operator+=(const VecN& o) {
    for (int i = 0; i < n; ++i) v[i] += o.v[i];
    return *this;
  }
  VecN& operator-=(const VecN& o) {
    for (int i = 0; i < n; ++i) v[i] -= o.v[i];
    return *this;
  }
  VecN& operator*=(double s) {
    for (int i = 0; i < n; ++i) v[i] *= s;
    return *this;
  }
};

inline VecN operator+(VecN a, const VecN& b) { return a += b; }
inline VecN operator-(VecN a, const VecN& b) { return a -= b; }
inline VecN operator*(double s, VecN a) { return a *= s; }

inline double dot(const VecN& a, const VecN& b) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const VecN& a) { return std::sqrt(dot(a, a)); }

// Symmetric use is the common case, but the storage is a general n x n.
struct MatN {
  int n = 0;
  std::array<double, kMaxDim * kMaxDim> m{};

  MatN() = default;
  explicit MatN(int dim) : n(dim) {}

  static MatN identity(int dim) {
    MatN a(dim);
    for (int i = 0; i < dim; ++i) a(i, i) = 1.0;
    return a;
  }

  double& operator()(int i, int j) { return m[static_cast<size_t>(i * kMaxDim + j)]; }
  double operator()(int i, int j) const { return m[static_cast<size_t>(i * kMaxDim + j)]; }

  MatN& operator+=(const MatN& o) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*this)(i, j) += o(i, j);
    return *this;
  }
  MatN& operator*=(double s) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*this)(i, j) *= s;
    return *this;
  }
};

inline MatN operator*(double s, MatN a) { return a *= s; }
inline MatN operator+(MatN a, const MatN& b) { return a += b; }

inline VecN matvec(const MatN& a, const VecN& x) {
  VecN y(a.n);
  for (int i = 0; i < a.n; ++i) {
    double s = 0.0;
    for (int j = 0; j < a.n; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline MatN matmul(const MatN& a, const MatN& b) {
  MatN c(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.n; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline double det(const MatN& a) {
  switch (a.n) {
    case 1: return a(0, 0);
    case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    case 3:
      return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
             a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
             a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    default: throw invalid_input_error("det: dimension out of range");
  }
}

inline MatN inverse(const MatN& a) {
  MatN inv(a.n);
  const double d = det(a);
  if (d == 0.0) throw numerical_error("inverse: singular matrix");
  const double id = 1.0 / d;
  switch (a.n) {
    case 1:
      inv(0, 0) = id;
      break;
    case 2:
      inv(0, 0) = a(1, 1) * id;
      inv(0, 1) = -a(0, 1) * id;
      inv(1, 0) = -a(1, 0) * id;
      inv(1, 1) = a(0, 0) * id;
      break;
    case 3:
      inv(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) * id;
      inv(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) * id;
      inv(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) * id;
      inv(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) * id;
      inv(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) * id;
      inv(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) * id;
      inv(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) * id;
      inv(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) * id;
      inv(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) * id;
      break;
    default: throw invalid_input_error("inverse: dimension out of range");
  }
  return inv;
}

// Cholesky success doubles as the SPD test used by metric validation.
inline bool cholesky(const MatN& a, MatN* l_out = nullptr) {
  MatN l(a.n);
  for (int i = 0; i < a.n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  if (l_out) *l_out = l;
  return true;
}

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues ascending; columns of `vecs` are the eigenvectors.
inline void eigen_sym(const MatN& a, VecN& vals, MatN& vecs) {
  MatN s = a;
  MatN v = MatN::identity(a.n);
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < a.n; ++p)
      for (int q = p + 1; q < a.n; ++q) off += s(p, q) * s(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < a.n; ++p)
      for (int q = p + 1; q < a.n; ++q) {
        if (std::abs(s(p, q)) < 1e-300) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int k = 0; k < a.n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (int k = 0; k < a.n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
        for (int k = 0; k < a.n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
  }
  vals = VecN(a.n);
  for (int i = 0; i < a.n; ++i) vals[i] = s(i, i);
  // Sort ascending, permuting eigenvector columns alongside.
  for (int i = 0; i < a.n; ++i)
    for (int j = i + 1; j < a.n; ++j)
      if (vals[j] < vals[i]) {
        std::swap(vals.v[i], vals.v[j]);
        for (int k = 0; k < a.n; ++k) std::swap(v(k, i), v(k, j));
      }
  vecs = v;
}

// Singular values (descending) of a general n x n matrix, with the right
// singular vectors as columns of `v`. Computed from the spectral
// decomposition of a^T a; adequate for kernel-dimension thresholds in
// conjugate-point scans.
inline void singular_values(const MatN& a, VecN& sv, MatN& v) {
  MatN ata(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.n; ++k) s += a(k, i) * a(k, j);
      ata(i, j) = s;
    }
  VecN ev;
  MatN evec;
  eigen_sym(ata, ev, evec);
  sv = VecN(a.n);
  v = MatN(a.n);
  // eigen_sym sorts ascending; emit descending singular values.
  for (int i = 0; i < a.n; ++i) {
    const int src = a.n - 1 - i;
    sv[i] = std::sqrt(std::max(0.0, ev[src]));
    for (int k = 0; k < a.n; ++k) v(k, i) = evec(k, src);
  }
}

} // namespace lrtk
