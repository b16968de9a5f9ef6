#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ftlab/grid.hpp"

namespace ftlab {

/// Phase membership rules G_i(u, Du). A law holds an ordered list of rules;
/// whatever no rule claims falls to the complement phase (index 0).
enum class PhaseKind {
  positive_set,      // u > 0
  negative_set,      // u < 0
  zero_set,          // |u| <= tol
  nondegenerate_set, // not (|u| <= tol and |Du| <= tol)
  gradient_band,     // lo <= |Du| < hi
  complement
};

const char* phase_kind_name(PhaseKind k);
PhaseKind phase_kind_from_name(const std::string& name);

struct PhaseRule {
  PhaseKind kind = PhaseKind::complement;
  double tolerance = -1.0;  // < 0: use the law's default equality tolerance
  double lo = 0.0, hi = 0.0;  // gradient_band bounds

  bool matches(double u, const Vec& grad, int d, double default_tol) const;
};

enum class BetaKind { constant, gaussian_bump, table };

/// Spatial exponent field beta_i(x).
struct ExponentField {
  BetaKind kind = BetaKind::constant;
  double value = 0.0;       // constant
  double amplitude = 0.0;   // gaussian_bump: amplitude * exp(-|x-c|^2 / (2 width^2))
  double width = 1.0;
  Vec center{0, 0, 0};
  std::shared_ptr<ScalarField> table;  // table: multilinear interpolation

  static ExponentField constant_field(double v);
  static ExponentField bump(double amplitude, double width, Vec center = {0, 0, 0});

  double eval(const Vec& x, int d) const;
};

enum class ModulusKind { zero, sqrt_kind, log_power, table };

/// Modulus of continuity shared by all exponent fields of a law.
struct ModulusSpec {
  ModulusKind kind = ModulusKind::zero;
  double p = 2.0;                                  // log_power parameter
  std::vector<std::pair<double, double>> table;    // (t, omega(t)), t ascending

  double omega(double t) const;
  /// omega(exp(ln_t)); avoids underflow of t for very negative ln_t.
  double omega_log(double ln_t) const;
  bool is_zero() const { return kind == ModulusKind::zero; }
};

const char* modulus_kind_name(ModulusKind k);
ModulusKind modulus_kind_from_name(const std::string& name);

/// Phase-dependent exponent beta(x, u, Du) = sum_i beta_i(x) chi_{G_i}.
/// Configured phases carry indices 1..N; index 0 is the complement.
struct DegeneracyLaw {
  std::vector<std::pair<PhaseRule, ExponentField>> phases;  // i = 1..N
  ExponentField complement_beta;                            // i = 0
  double beta_m = 0.0;
  double beta_M = 0.0;
  ModulusSpec modulus;
  double equality_tol = 1e-8;     // default for zero-ish tests; wired to h^2 by callers
  bool a3_strict_violated = false;  // beta_M >= 1 (flagged, not an error)

  int phase_count() const { return static_cast<int>(phases.size()) + 1; }

  /// Total and single-valued by construction.
  int classify(double u, const Vec& grad, int d) const;

  double beta_of_phase(int i, const Vec& x, int d) const;

  /// beta_{classify(u, grad)}(x); throws on values escaping [beta_m, beta_M].
  double beta_at(const Vec& x, double u, const Vec& grad, int d) const;

  /// Range check of every exponent field over the grid nodes (or a fixed
  /// lattice when no grid is given). Throws on violation; sets the A3 flag.
  void validate(const GridSpec* grid, int d);

  static DegeneracyLaw constant(double beta);
  static DegeneracyLaw zero_law() { return constant(0.0); }
};

struct ModulusReport {
  bool pass = false;
  double value_at_tmin = 0.0;   // ln(1/t) * omega(t) at t_min
  double analytic_limit = -1.0; // reported for closed-form kinds, else -1
  bool tail_decreasing = false;
};

/// Checks ln(1/t) * omega(t) -> 0 on the geometric sequence t = 2^-j down to
/// t_min; pass requires a decreasing tail and a value below `threshold` at
/// t_min.
ModulusReport check_decay_condition(const ModulusSpec& omega, double t_min,
                                    double threshold = 1e-2);

struct ThresholdResult {
  bool admissible = false;
  double rho = 0.0;   // largest admissible ratio; cap e^-1 when vacuous
  double sup_value = 0.0;  // sup_k k ln(1/rho) omega(rho^k) at the returned rho
};

/// Largest rho < e^-1 with sup_{k>=1} k * ln(1/rho) * omega(rho^k) <= eps,
/// located by a coarse log-scan plus bisection (relative 1e-3 on rho).
/// admissible = false when even rho = 1e-300 fails.
ThresholdResult max_admissible_ratio(const ModulusSpec& omega, double eps);

}  // namespace ftlab
