#include "ftlab/degeneracy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftlab {

const char* phase_kind_name(PhaseKind k) {
  switch (k) {
    case PhaseKind::positive_set: return "positive_set";
    case PhaseKind::negative_set: return "negative_set";
    case PhaseKind::zero_set: return "zero_set";
    case PhaseKind::nondegenerate_set: return "nondegenerate_set";
    case PhaseKind::gradient_band: return "gradient_band";
    case PhaseKind::complement: return "complement";
  }
  return "?";
}

PhaseKind phase_kind_from_name(const std::string& name) {
  if (name == "positive_set") return PhaseKind::positive_set;
  if (name == "negative_set") return PhaseKind::negative_set;
  if (name == "zero_set") return PhaseKind::zero_set;
  if (name == "nondegenerate_set") return PhaseKind::nondegenerate_set;
  if (name == "gradient_band") return PhaseKind::gradient_band;
  if (name == "complement") return PhaseKind::complement;
  throw std::invalid_argument("law.phase.kind unknown: " + name);
}

const char* modulus_kind_name(ModulusKind k) {
  switch (k) {
    case ModulusKind::zero: return "zero";
    case ModulusKind::sqrt_kind: return "sqrt";
    case ModulusKind::log_power: return "log_power";
    case ModulusKind::table: return "table";
  }
  return "?";
}

ModulusKind modulus_kind_from_name(const std::string& name) {
  if (name == "zero") return ModulusKind::zero;
  if (name == "sqrt") return ModulusKind::sqrt_kind;
  if (name == "log_power") return ModulusKind::log_power;
  if (name == "table") return ModulusKind::table;
  throw std::invalid_argument("law.modulus.kind unknown: " + name);
}

bool PhaseRule::matches(double u, const Vec& grad, int d, double default_tol) const {
  const double tol = tolerance >= 0.0 ? tolerance : default_tol;
  switch (kind) {
    case PhaseKind::positive_set: return u > 0.0;
    case PhaseKind::negative_set: return u < 0.0;
    case PhaseKind::zero_set: return std::abs(u) <= tol;
    case PhaseKind::nondegenerate_set:
      return !(std::abs(u) <= tol && norm(grad, d) <= tol);
    case PhaseKind::gradient_band: {
      const double g = norm(grad, d);
      return g >= lo && g < hi;
    }
    case PhaseKind::complement: return true;
  }
  return false;
}

ExponentField ExponentField::constant_field(double v) {
  ExponentField f;
  f.kind = BetaKind::constant;
  f.value = v;
  return f;
}

ExponentField ExponentField::bump(double amplitude, double width, Vec center) {
  ExponentField f;
  f.kind = BetaKind::gaussian_bump;
  f.amplitude = amplitude;
  f.width = width;
  f.center = center;
  return f;
}

double ExponentField::eval(const Vec& x, int d) const {
  switch (kind) {
    case BetaKind::constant: return value;
    case BetaKind::gaussian_bump: {
      const Vec r = sub(x, center, d);
      return amplitude * std::exp(-dot(r, r, d) / (2.0 * width * width));
    }
    case BetaKind::table: return interpolate(*table, x);
  }
  return 0.0;
}

double ModulusSpec::omega(double t) const {
  if (t <= 0.0) return 0.0;
  return omega_log(std::log(t));
}

double ModulusSpec::omega_log(double ln_t) const {
  switch (kind) {
    case ModulusKind::zero: return 0.0;
    case ModulusKind::sqrt_kind: return std::exp(0.5 * ln_t);
    case ModulusKind::log_power: return std::pow(-ln_t, -p);
    case ModulusKind::table: {
      if (table.empty()) return 0.0;
      const double t = std::exp(ln_t);
      if (t <= table.front().first) {
        // Linear ramp from omega(0+) = 0 to the first table entry.
        return table.front().second * (t / table.front().first);
      }
      if (t >= table.back().first) return table.back().second;
      auto it = std::lower_bound(table.begin(), table.end(), t,
                                 [](const auto& row, double v) { return row.first < v; });
      const auto [t1, w1] = *it;
      const auto [t0, w0] = *(it - 1);
      return w0 + (w1 - w0) * (t - t0) / (t1 - t0);
    }
  }
  return 0.0;
}

int DegeneracyLaw::classify(double u, const Vec& grad, int d) const {
  for (size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].first.matches(u, grad, d, equality_tol)) return static_cast<int>(i) + 1;
  }
  return 0;
}

double DegeneracyLaw::beta_of_phase(int i, const Vec& x, int d) const {
  if (i == 0) return complement_beta.eval(x, d);
  return phases[static_cast<size_t>(i) - 1].second.eval(x, d);
}

double DegeneracyLaw::beta_at(const Vec& x, double u, const Vec& grad, int d) const {
  const double b = beta_of_phase(classify(u, grad, d), x, d);
  const double slack = 1e-9 * (1.0 + std::abs(beta_M));
  if (b < beta_m - slack || b > beta_M + slack)
    throw std::domain_error("beta_at: exponent escapes [beta_m, beta_M]; malformed law");
  return b;
}

void DegeneracyLaw::validate(const GridSpec* grid, int d) {
  if (beta_m < 0.0) throw std::invalid_argument("law.beta_m must be >= 0");
  if (beta_M < beta_m) throw std::invalid_argument("law.beta_M must be >= beta_m");
  for (size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].first.kind == PhaseKind::complement)
      throw std::invalid_argument("law.phases: complement must be the trailing entry only");
  }
  a3_strict_violated = beta_M >= 1.0;

  auto check_point = [&](const Vec& x) {
    const double slack = 1e-9 * (1.0 + beta_M);
    for (int i = 0; i < phase_count(); ++i) {
      const double b = beta_of_phase(i, x, d);
      if (b < beta_m - slack || b > beta_M + slack)
        throw std::invalid_argument("law: beta_" + std::to_string(i) +
                                    " leaves [beta_m, beta_M] on the domain");
    }
  };
  if (grid != nullptr) {
    grid->for_each([&](const MultiIndex& mi, long) { check_point(grid->point(mi)); });
  } else {
    const int m = 17;
    GridSpec lattice = GridSpec::make(d, m);
    lattice.for_each([&](const MultiIndex& mi, long) { check_point(lattice.point(mi)); });
  }
}

DegeneracyLaw DegeneracyLaw::constant(double beta) {
  DegeneracyLaw law;
  law.complement_beta = ExponentField::constant_field(beta);
  law.beta_m = beta;
  law.beta_M = beta;
  law.modulus.kind = ModulusKind::zero;
  law.a3_strict_violated = beta >= 1.0;
  return law;
}

ModulusReport check_decay_condition(const ModulusSpec& omega, double t_min,
                                    double threshold) {
  if (!(t_min > 0.0 && t_min < std::exp(-1.0)))
    throw std::invalid_argument("t_min must lie in (0, e^-1)");
  ModulusReport rep;

  // Walk t = 2^-j down to t_min; monotonicity is judged on the tail t <= e^-2
  // where transients of bounded moduli have settled.
  const double tail_start = std::exp(-2.0);
  bool decreasing = true;
  bool have_prev = false;
  double prev = 0.0;
  for (double t = 0.5; t >= t_min * (1.0 - 1e-12); t *= 0.5) {
    const double value = std::log(1.0 / t) * omega.omega(t);
    if (t <= tail_start) {
      if (have_prev && value > prev + 1e-15) decreasing = false;
      have_prev = true;
      prev = value;
    }
  }
  rep.value_at_tmin = std::log(1.0 / t_min) * omega.omega(t_min);
  rep.tail_decreasing = decreasing;
  rep.pass = decreasing && rep.value_at_tmin <= threshold;
  switch (omega.kind) {
    case ModulusKind::zero: rep.analytic_limit = 0.0; break;
    case ModulusKind::sqrt_kind: rep.analytic_limit = 0.0; break;
    case ModulusKind::log_power:
      // ln(1/t) * ln(1/t)^-p is 1 for p = 1 and diverges for p < 1.
      rep.analytic_limit = omega.p > 1.0 ? 0.0 : (omega.p == 1.0 ? 1.0 : -1.0);
      if (omega.p <= 1.0) rep.pass = false;
      break;
    case ModulusKind::table: rep.analytic_limit = -1.0; break;
  }
  return rep;
}

namespace {

// sup over k = 1..K of k * ln(1/rho) * omega(rho^k), with early exit once the
// terms have decayed well below the running max for a stretch.
double sup_over_k(const ModulusSpec& omega, double ln_rho, int kmax = 4096) {
  const double L = -ln_rho;
  double best = 0.0;
  int quiet = 0;
  for (int k = 1; k <= kmax; ++k) {
    const double v = k * L * omega.omega_log(k * ln_rho);
    if (v > best) {
      best = v;
      quiet = 0;
    } else if (v < 1e-3 * best) {
      if (++quiet > 16) break;
    }
  }
  return best;
}

}  // namespace

ThresholdResult max_admissible_ratio(const ModulusSpec& omega, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  ThresholdResult out;
  const double ln_cap = -1.0;        // rho < e^-1
  const double ln_floor = std::log(1e-300);

  if (sup_over_k(omega, ln_cap) <= eps) {
    out.admissible = true;
    out.rho = std::exp(ln_cap);
    out.sup_value = sup_over_k(omega, ln_cap);
    return out;
  }

  // Coarse scan from the cap downward for the largest admissible seed, then
  // bisection against the nearest inadmissible point above it.
  const int steps = 600;
  double lo = 0.0, hi = 0.0;  // ln rho: lo admissible, hi not
  bool found = false;
  double prev = ln_cap;
  for (int i = 1; i <= steps; ++i) {
    const double lnr = ln_cap + (ln_floor - ln_cap) * (static_cast<double>(i) / steps);
    if (sup_over_k(omega, lnr) <= eps) {
      lo = lnr;
      hi = prev;
      found = true;
      break;
    }
    prev = lnr;
  }
  if (!found) {
    out.admissible = false;
    out.rho = 0.0;
    out.sup_value = sup_over_k(omega, ln_floor);
    return out;
  }
  // Bisect to relative 1e-3 on rho, i.e. absolute 1e-3 on ln rho.
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (sup_over_k(omega, mid) <= eps) lo = mid;
    else hi = mid;
  }
  out.admissible = true;
  out.rho = std::exp(lo);
  out.sup_value = sup_over_k(omega, lo);
  return out;
}

}  // namespace ftlab
