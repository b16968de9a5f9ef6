#pragma once

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftlab/geom.hpp"

namespace ftlab {

/// Uniform Cartesian grid over [-1,1]^d with a unit-ball interior mask.
///
/// Nodes sit at coordinates (2i - (n-1))/(n-1), i = 0..n-1, per axis; n is
/// odd so the origin is a node and h = 2/(n-1). A node is interior when
/// |x| < 1 - margin*h (Euclidean), which keeps every stencil neighbor of an
/// interior node inside the square. Boundary data is imposed on the
/// non-interior nodes (ghost-value approach).
struct GridSpec {
  int d = 2;
  int n = 0;
  int margin = 1;
  double h = 0.0;

  static GridSpec make(int d, int n, int margin = 1) {
    if (d < 1 || d > 3) throw std::invalid_argument("grid.d must be 1, 2 or 3");
    if (n < 5 || n % 2 == 0) throw std::invalid_argument("grid.n must be odd >= 5");
    if (margin < 1) throw std::invalid_argument("grid.margin must be >= 1");
    GridSpec g;
    g.d = d;
    g.n = n;
    g.margin = margin;
    g.h = 2.0 / (n - 1);
    return g;
  }

  long total_nodes() const {
    long t = 1;
    for (int i = 0; i < d; ++i) t *= n;
    return t;
  }

  double coord(int i) const { return (2.0 * i - (n - 1)) / (n - 1); }

  Vec point(const MultiIndex& mi) const {
    Vec x{0, 0, 0};
    for (int k = 0; k < d; ++k) x[k] = coord(mi[k]);
    return x;
  }

  long id(const MultiIndex& mi) const {
    long v = 0;
    for (int k = 0; k < d; ++k) v = v * n + mi[k];
    return v;
  }

  MultiIndex unpack(long id) const {
    MultiIndex mi{0, 0, 0};
    for (int k = d - 1; k >= 0; --k) {
      mi[k] = static_cast<int>(id % n);
      id /= n;
    }
    return mi;
  }

  bool in_bounds(const MultiIndex& mi) const {
    for (int k = 0; k < d; ++k)
      if (mi[k] < 0 || mi[k] >= n) return false;
    return true;
  }

  bool is_interior(const MultiIndex& mi) const {
    return norm(point(mi), d) < 1.0 - margin * h;
  }

  MultiIndex center() const {
    MultiIndex c{0, 0, 0};
    for (int k = 0; k < d; ++k) c[k] = (n - 1) / 2;
    return c;
  }

  template <class F>
  void for_each(F&& f) const {
    const long total = total_nodes();
    for (long id = 0; id < total; ++id) f(unpack(id), id);
  }

  template <class F>
  void for_each_interior(F&& f) const {
    for_each([&](const MultiIndex& mi, long id) {
      if (is_interior(mi)) f(mi, id);
    });
  }

  bool same_layout(const GridSpec& o) const {
    return d == o.d && n == o.n && margin == o.margin;
  }
};

/// Scalar samples on every node of a grid. Immutable by convention once a
/// field leaves the routine that built it.
struct ScalarField {
  GridSpec grid;
  std::vector<double> v;

  static ScalarField zeros(const GridSpec& g) {
    ScalarField f;
    f.grid = g;
    f.v.assign(g.total_nodes(), 0.0);
    return f;
  }

  static ScalarField constant(const GridSpec& g, double c) {
    ScalarField f = zeros(g);
    for (auto& x : f.v) x = c;
    return f;
  }

  static ScalarField sample(const GridSpec& g, const std::function<double(const Vec&)>& fn) {
    ScalarField f = zeros(g);
    g.for_each([&](const MultiIndex& mi, long id) { f.v[id] = fn(g.point(mi)); });
    return f;
  }

  double at(long id) const { return v[id]; }
  double& at(long id) { return v[id]; }
  double at(const MultiIndex& mi) const { return v[grid.id(mi)]; }

  double sup_interior() const {
    double s = 0.0;
    grid.for_each_interior([&](const MultiIndex&, long id) {
      s = std::max(s, std::abs(v[id]));
    });
    return s;
  }

  double max_interior() const {
    double s = -1e300;
    grid.for_each_interior([&](const MultiIndex&, long id) { s = std::max(s, v[id]); });
    return s;
  }

  double min_interior() const {
    double s = 1e300;
    grid.for_each_interior([&](const MultiIndex&, long id) { s = std::min(s, v[id]); });
    return s;
  }

  bool finite_on_interior() const {
    bool ok = true;
    grid.for_each_interior([&](const MultiIndex&, long id) {
      if (!std::isfinite(v[id])) ok = false;
    });
    return ok;
  }
};

/// Vector samples (d components per node), gradient output.
struct VectorField {
  GridSpec grid;
  std::vector<double> comps;  // node-major, d entries per node

  Vec at(long id) const {
    Vec g{0, 0, 0};
    for (int k = 0; k < grid.d; ++k) g[k] = comps[id * grid.d + k];
    return g;
  }
};

/// Symmetric-matrix samples, Hessian output.
struct MatrixField {
  GridSpec grid;
  std::vector<SymMat> mats;
};

inline MultiIndex shifted(const MultiIndex& mi, int axis, int off) {
  MultiIndex s = mi;
  s[axis] += off;
  return s;
}

/// Central-difference first derivatives at an interior node; exact for quadratics.
inline Vec gradient_at(const ScalarField& f, const MultiIndex& mi) {
  const GridSpec& g = f.grid;
  Vec grad{0, 0, 0};
  for (int k = 0; k < g.d; ++k) {
    grad[k] = (f.at(shifted(mi, k, +1)) - f.at(shifted(mi, k, -1))) / (2.0 * g.h);
  }
  return grad;
}

/// Second differences on the diagonal, four-corner stencil off-diagonal.
inline SymMat hessian_at(const ScalarField& f, const MultiIndex& mi) {
  const GridSpec& g = f.grid;
  SymMat H = SymMat::zero(g.d);
  const double h2 = g.h * g.h;
  const double u0 = f.at(mi);
  for (int k = 0; k < g.d; ++k) {
    H.m[k] = (f.at(shifted(mi, k, +1)) - 2.0 * u0 + f.at(shifted(mi, k, -1))) / h2;
  }
  for (int a = 0; a < g.d; ++a)
    for (int b = a + 1; b < g.d; ++b) {
      MultiIndex pp = shifted(shifted(mi, a, +1), b, +1);
      MultiIndex pm = shifted(shifted(mi, a, +1), b, -1);
      MultiIndex mp = shifted(shifted(mi, a, -1), b, +1);
      MultiIndex mm = shifted(shifted(mi, a, -1), b, -1);
      H.set(a, b, (f.at(pp) - f.at(pm) - f.at(mp) + f.at(mm)) / (4.0 * h2));
    }
  return H;
}

/// Whole-field gradient at interior nodes (zeros elsewhere).
inline VectorField gradient(const ScalarField& f) {
  VectorField out;
  out.grid = f.grid;
  out.comps.assign(f.grid.total_nodes() * f.grid.d, 0.0);
  f.grid.for_each_interior([&](const MultiIndex& mi, long id) {
    Vec grd = gradient_at(f, mi);
    for (int k = 0; k < f.grid.d; ++k) out.comps[id * f.grid.d + k] = grd[k];
  });
  return out;
}

/// Whole-field Hessian at interior nodes (zero matrices elsewhere).
inline MatrixField hessian(const ScalarField& f) {
  MatrixField out;
  out.grid = f.grid;
  out.mats.assign(f.grid.total_nodes(), SymMat::zero(f.grid.d));
  f.grid.for_each_interior([&](const MultiIndex& mi, long id) {
    out.mats[id] = hessian_at(f, mi);
  });
  return out;
}

/// Multilinear interpolation; x is clamped to the grid square.
inline double interpolate(const ScalarField& f, const Vec& x) {
  const GridSpec& g = f.grid;
  MultiIndex base{0, 0, 0};
  double w[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < g.d; ++k) {
    double t = (std::clamp(x[k], -1.0, 1.0) + 1.0) / g.h;
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, g.n - 2);
    base[k] = i;
    w[k] = std::clamp(t - i, 0.0, 1.0);
  }
  double acc = 0.0;
  const int corners = 1 << g.d;
  for (int c = 0; c < corners; ++c) {
    MultiIndex mi = base;
    double wt = 1.0;
    for (int k = 0; k < g.d; ++k) {
      if (c & (1 << k)) {
        mi[k] += 1;
        wt *= w[k];
      } else {
        wt *= 1.0 - w[k];
      }
    }
    acc += wt * f.at(mi);
  }
  return acc;
}

}  // namespace ftlab
