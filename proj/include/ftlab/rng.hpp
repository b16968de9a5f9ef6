#pragma once

#include <cmath>
#include <cstdint>

#include "ftlab/geom.hpp"

namespace ftlab {

/// splitmix64 generator. Self-contained so that streams are reproducible
/// byte-for-byte regardless of the standard library in use.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return std::ldexp(static_cast<double>(next_u64() >> 11), -53); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  double normal() {
    // Box-Muller, one value per call.
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vec unit_vector(int d) {
    Vec v{0, 0, 0};
    double n = 0.0;
    do {
      for (int i = 0; i < d; ++i) v[i] = normal();
      n = norm(v, d);
    } while (n < 1e-12);
    return scale(v, 1.0 / n, d);
  }

  /// Derive an independent stream from (seed, a, b) without sharing state.
  static uint64_t mix(uint64_t seed, uint64_t a, uint64_t b = 0) {
    Rng r(seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xD1B54A32D192ED03ULL));
    return r.next_u64();
  }
};

/// Random symmetric matrix with entries in [-s, s].
inline SymMat random_symmetric(Rng& rng, int d, double s) {
  SymMat M = SymMat::zero(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) M.set(i, j, rng.uniform(-s, s));
  return M;
}

/// Random rotation (d=1 trivial, d=2 plane rotation, d=3 composed plane
/// rotations), returned as column-major entries r[i][j].
inline std::array<std::array<double, 3>, 3> random_rotation(Rng& rng, int d) {
  std::array<std::array<double, 3>, 3> R{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  auto apply_plane = [&](int a, int b, double t) {
    const double c = std::cos(t), s = std::sin(t);
    for (int i = 0; i < 3; ++i) {
      const double ra = R[i][a], rb = R[i][b];
      R[i][a] = c * ra - s * rb;
      R[i][b] = s * ra + c * rb;
    }
  };
  if (d >= 2) apply_plane(0, 1, rng.uniform(0.0, 2.0 * M_PI));
  if (d == 3) {
    apply_plane(0, 2, rng.uniform(0.0, 2.0 * M_PI));
    apply_plane(1, 2, rng.uniform(0.0, 2.0 * M_PI));
  }
  return R;
}

/// Symmetric matrix with prescribed eigenvalues under a random rotation.
inline SymMat symmetric_with_spectrum(Rng& rng, int d, const std::array<double, 3>& eig) {
  auto R = random_rotation(rng, d);
  SymMat M = SymMat::zero(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double v = 0.0;
      for (int k = 0; k < d; ++k) v += eig[k] * R[i][k] * R[j][k];
      M.set(i, j, v);
    }
  return M;
}

/// Random positive semidefinite matrix with spectral radius <= s.
inline SymMat random_psd(Rng& rng, int d, double s) {
  std::array<double, 3> eig{0, 0, 0};
  for (int i = 0; i < d; ++i) eig[i] = rng.uniform(0.0, s);
  return symmetric_with_spectrum(rng, d, eig);
}

}  // namespace ftlab
