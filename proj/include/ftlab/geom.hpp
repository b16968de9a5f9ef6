#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace ftlab {

// Points and vectors live in R^d with d <= 3; unused trailing components are 0.
using Vec = std::array<double, 3>;
using MultiIndex = std::array<int, 3>;

inline Vec vec(double x, double y = 0.0, double z = 0.0) { return {x, y, z}; }

inline double dot(const Vec& a, const Vec& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a, int d) { return std::sqrt(dot(a, a, d)); }

inline Vec add(const Vec& a, const Vec& b, int d) {
  Vec r{0, 0, 0};
  for (int i = 0; i < d; ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec sub(const Vec& a, const Vec& b, int d) {
  Vec r{0, 0, 0};
  for (int i = 0; i < d; ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec scale(const Vec& a, double s, int d) {
  Vec r{0, 0, 0};
  for (int i = 0; i < d; ++i) r[i] = s * a[i];
  return r;
}

/// Symmetric d x d matrix, d <= 3, packed as (xx, yy, zz, xy, xz, yz).
struct SymMat {
  int d = 2;
  std::array<double, 6> m{};  // unused slots stay 0

  static SymMat zero(int d) { return SymMat{d, {}}; }

  static SymMat identity(int d) {
    SymMat s{d, {}};
    for (int i = 0; i < d; ++i) s.m[i] = 1.0;
    return s;
  }

  static SymMat diag(int d, double a, double b = 0.0, double c = 0.0) {
    SymMat s{d, {}};
    s.m[0] = a;
    if (d > 1) s.m[1] = b;
    if (d > 2) s.m[2] = c;
    return s;
  }

  double operator()(int i, int j) const {
    if (i == j) return m[i];
    int a = std::min(i, j), b = std::max(i, j);
    if (a == 0 && b == 1) return m[3];
    if (a == 0 && b == 2) return m[4];
    return m[5];
  }

  void set(int i, int j, double v) {
    if (i == j) {
      m[i] = v;
      return;
    }
    int a = std::min(i, j), b = std::max(i, j);
    if (a == 0 && b == 1) m[3] = v;
    else if (a == 0 && b == 2) m[4] = v;
    else m[5] = v;
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < d; ++i) t += m[i];
    return t;
  }

  SymMat plus(const SymMat& o) const {
    SymMat s{d, m};
    for (int i = 0; i < 6; ++i) s.m[i] += o.m[i];
    return s;
  }

  SymMat scaled(double f) const {
    SymMat s{d, m};
    for (int i = 0; i < 6; ++i) s.m[i] *= f;
    return s;
  }

  /// Eigenvalues in ascending order. Closed form for d <= 2, trigonometric
  /// solve of the characteristic cubic for d = 3.
  std::array<double, 3> eigenvalues() const;

  double max_abs_eigenvalue() const {
    auto e = eigenvalues();
    double v = 0.0;
    for (int i = 0; i < d; ++i) v = std::max(v, std::abs(e[i]));
    return v;
  }

  double max_eigenvalue() const { return eigenvalues()[d - 1]; }
};

inline std::array<double, 3> SymMat::eigenvalues() const {
  if (d == 1) return {m[0], 0.0, 0.0};
  if (d == 2) {
    const double a = m[0], b = m[1], c = m[3];
    const double mean = 0.5 * (a + b);
    const double disc = std::sqrt(0.25 * (a - b) * (a - b) + c * c);
    return {mean - disc, mean + disc, 0.0};
  }
  const double a00 = m[0], a11 = m[1], a22 = m[2];
  const double a01 = m[3], a02 = m[4], a12 = m[5];
  const double p1 = a01 * a01 + a02 * a02 + a12 * a12;
  if (p1 == 0.0) {
    std::array<double, 3> e{a00, a11, a22};
    if (e[0] > e[1]) std::swap(e[0], e[1]);
    if (e[1] > e[2]) std::swap(e[1], e[2]);
    if (e[0] > e[1]) std::swap(e[0], e[1]);
    return e;
  }
  const double q = (a00 + a11 + a22) / 3.0;
  const double p2 = (a00 - q) * (a00 - q) + (a11 - q) * (a11 - q) +
                    (a22 - q) * (a22 - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  // B = (A - q I) / p
  const double b00 = (a00 - q) / p, b11 = (a11 - q) / p, b22 = (a22 - q) / p;
  const double b01 = a01 / p, b02 = a02 / p, b12 = a12 / p;
  double detB = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) +
                b02 * (b01 * b12 - b11 * b02);
  double r = detB / 2.0;
  r = std::max(-1.0, std::min(1.0, r));
  const double phi = std::acos(r) / 3.0;
  const double e_hi = q + 2.0 * p * std::cos(phi);
  const double e_lo = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  const double e_mid = 3.0 * q - e_hi - e_lo;
  return {e_lo, e_mid, e_hi};
}

/// Affine map x -> a + b . x
struct AffineMap {
  double a = 0.0;
  Vec b{0, 0, 0};

  double eval(const Vec& x, int d) const { return a + dot(b, x, d); }
};

}  // namespace ftlab
