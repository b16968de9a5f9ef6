#include "ftlab/viscosity.hpp"

#include <algorithm>
#include <cmath>

#include "ftlab/rng.hpp"

namespace ftlab {

namespace {

struct Touch {
  bool valid = false;
  long node_id = 0;
  MultiIndex node{0, 0, 0};
  Vec grad{0, 0, 0};  // Dphi at the touching point
  SymMat Q;
};

/// Touching-from-above trial on flip * u: generates one quadratic around a
/// random interior node and locates the window maximum of flip*u - psi.
/// Touches from below are generated as touches from above on the negated
/// field and mirrored back (grad -> -grad, Q -> -Q), which makes the two
/// sides of the check exact duals trial-by-trial.
Touch make_touch_above(const ScalarField& u, double flip, Rng& rng, int window,
                       double Q_max) {
  const GridSpec& g = u.grid;
  Touch t;

  // Random interior center node.
  MultiIndex z{0, 0, 0};
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (int k = 0; k < g.d; ++k) z[k] = rng.uniform_int(1, g.n - 2);
    if (g.is_interior(z)) break;
    if (attempt == 63) return t;
  }
  if (!g.is_interior(z)) return t;
  const Vec zx = g.point(z);

  // Half the trials hug the local jet so that near-tangent quadratics (the
  // informative ones) appear with certainty; the rest are free-range.
  SymMat Q = SymMat::zero(g.d);
  Vec q{0, 0, 0};
  const bool tangent = rng.uniform() < 0.5;
  const Vec du = scale(gradient_at(u, z), flip, g.d);
  if (tangent) {
    const SymMat H = hessian_at(u, z).scaled(flip);
    const double s = rng.uniform(0.1, 2.0) * g.h;
    Q = H.plus(SymMat::identity(g.d).scaled(s));
    for (int k = 0; k < g.d; ++k)
      q[k] = du[k] + rng.uniform(-1.0, 1.0) * g.h;
  } else {
    std::array<double, 3> eig{0, 0, 0};
    for (int k = 0; k < g.d; ++k) eig[k] = rng.uniform(-Q_max, Q_max);
    Q = symmetric_with_spectrum(rng, g.d, eig);
    const double spread = 0.5 * window * g.h * (1.0 + Q.max_abs_eigenvalue());
    for (int k = 0; k < g.d; ++k) q[k] = du[k] + rng.uniform(-spread, spread);
  }

  // Window scan for the maximum of w = flip*u - (q.(x-z) + (x-z)Q(x-z)/2).
  double best = -1e300;
  MultiIndex best_mi{0, 0, 0};
  bool found = false;
  const int W = window;
  auto visit = [&](const MultiIndex& node) {
    if (!g.in_bounds(node) || !g.is_interior(node)) return;
    const Vec x = g.point(node);
    const Vec dx = sub(x, zx, g.d);
    double quad = 0.0;
    for (int a = 0; a < g.d; ++a)
      for (int b = 0; b < g.d; ++b) quad += dx[a] * Q(a, b) * dx[b];
    const double w = flip * u.at(node) - (dot(q, dx, g.d) + 0.5 * quad);
    if (w > best) {
      best = w;
      best_mi = node;
      found = true;
    }
  };
  if (g.d == 1) {
    for (int i = -W; i <= W; ++i) visit(shifted(z, 0, i));
  } else if (g.d == 2) {
    for (int i = -W; i <= W; ++i)
      for (int j = -W; j <= W; ++j) visit(shifted(shifted(z, 0, i), 1, j));
  } else {
    for (int i = -W; i <= W; ++i)
      for (int j = -W; j <= W; ++j)
        for (int k = -W; k <= W; ++k)
          visit(shifted(shifted(shifted(z, 0, i), 1, j), 2, k));
  }
  if (!found) return t;

  // The extremum must be interior to the window and away from the ball edge;
  // a rim extremum is not a touching point.
  for (int k = 0; k < g.d; ++k)
    if (std::abs(best_mi[k] - z[k]) >= W) return t;
  for (int k = 0; k < g.d; ++k)
    for (int off : {-1, 1})
      if (!g.is_interior(shifted(best_mi, k, off))) return t;

  const Vec dx = sub(g.point(best_mi), zx, g.d);
  Vec grad = q;
  for (int a = 0; a < g.d; ++a)
    for (int b = 0; b < g.d; ++b) grad[a] += Q(a, b) * dx[b];

  t.valid = true;
  t.node = best_mi;
  t.node_id = g.id(best_mi);
  t.grad = grad;
  t.Q = Q;
  return t;
}

Touch make_touch(const ScalarField& u, Rng& rng, int window, double Q_max,
                 bool from_above) {
  if (from_above) return make_touch_above(u, +1.0, rng, window, Q_max);
  Touch t = make_touch_above(u, -1.0, rng, window, Q_max);
  if (t.valid) {
    t.grad = scale(t.grad, -1.0, u.grid.d);
    t.Q = t.Q.scaled(-1.0);
  }
  return t;
}

EnvelopeReport run_envelope(const ScalarField& u, const ProblemSpec& spec,
                            const CheckConfig& cfg, bool from_above) {
  EnvelopeReport rep;
  rep.trials = cfg.trials;
  rep.f_norm = spec.rhs.sup_interior();
  rep.tolerance = cfg.tol_C * (u.grid.h + cfg.reg_eps);
  for (long t = 0; t < cfg.trials; ++t) {
    Rng rng(Rng::mix(cfg.seed, 0xE1157u, static_cast<uint64_t>(t)));
    Touch touch = make_touch(u, rng, cfg.window, cfg.Q_max, from_above);
    if (!touch.valid) continue;
    ++rep.touches;
    const Vec x = u.grid.point(touch.node);
    const double Fq = spec.op.eval(touch.Q);
    double margin;
    if (from_above) {
      const double env = law_envelope(spec, x, touch.grad, Fq, true);
      margin = env - rep.f_norm;
    } else {
      const double env = law_envelope(spec, x, touch.grad, Fq, false);
      margin = -(env + rep.f_norm);
    }
    rep.worst_margin = std::max(rep.worst_margin, margin);
    if (margin > rep.tolerance) {
      ++rep.violation_count;
      if (rep.violations.size() < 64)
        rep.violations.push_back({t, touch.node_id, touch.grad, touch.Q, margin});
    }
  }
  return rep;
}

}  // namespace

double law_envelope(const ProblemSpec& spec, const Vec& x, const Vec& grad, double Fq,
                    bool use_min) {
  const int d = spec.rhs.grid.d;
  const Vec shifted_grad = add(grad, spec.shift, d);
  const double gn = norm(shifted_grad, d);
  double out = use_min ? 1e300 : -1e300;
  for (int i = 0; i < spec.law.phase_count(); ++i) {
    const double beta = spec.law.beta_of_phase(i, x, d);
    const double v = std::pow(gn, beta) * Fq;
    out = use_min ? std::min(out, v) : std::max(out, v);
  }
  return out;
}

double two_exponent_envelope_min(double grad_norm, double F_value, double beta_m,
                                 double beta_M) {
  return std::min(std::pow(grad_norm, beta_m) * F_value,
                  std::pow(grad_norm, beta_M) * F_value);
}

EnvelopeReport check_subsolution_envelope(const ScalarField& u, const ProblemSpec& spec,
                                          const CheckConfig& cfg) {
  return run_envelope(u, spec, cfg, true);
}

EnvelopeReport check_supersolution_envelope(const ScalarField& u, const ProblemSpec& spec,
                                            const CheckConfig& cfg) {
  return run_envelope(u, spec, cfg, false);
}

DivisionReport check_homogeneous_division(const ScalarField& u, const EllipticOperator& op,
                                          const CheckConfig& cfg) {
  DivisionReport rep;
  rep.tolerance = 10.0 * u.grid.h;
  for (long t = 0; t < cfg.trials; ++t) {
    Rng rng(Rng::mix(cfg.seed, 0xD171u, static_cast<uint64_t>(t)));
    const bool from_above = (t % 2 == 0);
    Touch touch = make_touch(u, rng, cfg.window, cfg.Q_max, from_above);
    if (!touch.valid) continue;
    const double Fq = op.eval(touch.Q);
    if (from_above) {
      ++rep.above_touches;
      rep.above_max_F = std::max(rep.above_max_F, Fq);
    } else {
      ++rep.below_touches;
      rep.below_min_F = std::min(rep.below_min_F, Fq);
    }
  }
  rep.pass = rep.above_touches > 0 && rep.below_touches > 0 &&
             rep.above_max_F <= rep.tolerance && rep.below_min_F >= -rep.tolerance;
  return rep;
}

}  // namespace ftlab
