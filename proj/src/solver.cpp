#include "ftlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ftlab {

namespace {

struct NodeEval {
  double g = 1.0;  // (|Du+p|^2 + eps^2)^{beta/2}
  double R = 0.0;
};

inline NodeEval eval_node(const ProblemSpec& spec, const ScalarField& u,
                          const MultiIndex& mi, long id, double reg_eps) {
  const GridSpec& grid = u.grid;
  const Vec x = grid.point(mi);
  const Vec du = gradient_at(u, mi);
  const SymMat H = hessian_at(u, mi);
  const double beta = spec.law.beta_at(x, u.at(id), du, grid.d);
  const Vec q = add(du, spec.shift, grid.d);
  const double g = std::pow(dot(q, q, grid.d) + reg_eps * reg_eps, 0.5 * beta);
  return {g, g * spec.op.eval(H) - spec.rhs.at(id)};
}

/// One lexicographic Gauss-Seidel sweep. Returns the max |R| observed while
/// updating (neighbors mix old and new values; the caller confirms
/// convergence with a fresh residual pass).
double sweep(const ProblemSpec& spec, double reg_eps, double tau, double over_relax,
             ScalarField& u) {
  double worst = 0.0;
  u.grid.for_each_interior([&](const MultiIndex& mi, long id) {
    const NodeEval e = eval_node(spec, u, mi, id, reg_eps);
    u.at(id) -= over_relax * tau * e.R / e.g;
    worst = std::max(worst, std::abs(e.R));
  });
  return worst;
}

double residual_sup(const ProblemSpec& spec, double reg_eps, const ScalarField& u) {
  double worst = 0.0;
  u.grid.for_each_interior([&](const MultiIndex& mi, long id) {
    worst = std::max(worst, std::abs(eval_node(spec, u, mi, id, reg_eps).R));
  });
  return worst;
}

std::vector<double> default_continuation(double target) {
  if (target >= 1.0) return {target};
  std::vector<double> sched;
  const int stages = 4;
  for (int j = 1; j <= stages; ++j)
    sched.push_back(std::exp(std::log(target) * static_cast<double>(j) / stages));
  return sched;
}

ScalarField datum_extension(const GridSpec& grid,
                            const std::function<double(const Vec&)>& boundary) {
  return ScalarField::sample(grid, boundary);
}

struct StageOutcome {
  SolveStatus status = SolveStatus::converged;
  double final_residual = 0.0;
  long sweeps = 0;
};

StageOutcome run_stage(const ProblemSpec& spec, const SolveConfig& config,
                       double reg_eps, double tol, ScalarField& u,
                       std::vector<double>& history, long history_stride) {
  StageOutcome out;
  const GridSpec& grid = u.grid;
  const double tau = config.step(grid.h, grid.d, spec.op.Lambda);
  double initial = -1.0;
  for (long it = 0; it < config.max_iters; ++it) {
    const double observed = sweep(spec, reg_eps, tau, config.over_relax, u);
    ++out.sweeps;
    if (initial < 0.0) initial = std::max(observed, 1e-300);
    if (history_stride > 0 && it % history_stride == 0) history.push_back(observed);
    if (!std::isfinite(observed) || (it > 2 && observed > 10.0 * initial && observed > tol)) {
      out.status = SolveStatus::step_unstable;
      out.final_residual = observed;
      return out;
    }
    if (observed <= tol) {
      const double fresh = residual_sup(spec, reg_eps, u);
      out.final_residual = fresh;
      if (fresh <= tol) {
        out.status = SolveStatus::converged;
        return out;
      }
    }
  }
  out.status = SolveStatus::non_convergence;
  out.final_residual = residual_sup(spec, reg_eps, u);
  return out;
}

bool law_is_zero(const DegeneracyLaw& law) {
  return law.phases.empty() && law.complement_beta.kind == BetaKind::constant &&
         law.complement_beta.value == 0.0;
}

/// Continuation over reg_eps on one grid, starting from the given iterate.
SolveResult solve_on_grid(const ProblemSpec& spec, const SolveConfig& config,
                          ScalarField init) {
  SolveResult res;
  res.u = std::move(init);
  const GridSpec& grid = res.u.grid;
  const double target = spec.resolved_reg_eps(grid.h);
  std::vector<double> sched = config.continuation.empty()
                                  ? default_continuation(target)
                                  : config.continuation;
  if (law_is_zero(spec.law)) sched = {target};  // g = 1 identically, one stage
  res.reg_schedule = sched;

  const long history_stride =
      std::max<long>(1, config.max_iters * static_cast<long>(sched.size()) /
                            std::max(1, config.history_max));
  for (size_t s = 0; s < sched.size(); ++s) {
    const bool last = s + 1 == sched.size();
    const double stage_tol = last ? config.tol : std::max(config.tol * 10.0, 1e-4);
    StageOutcome out = run_stage(spec, config, sched[s], stage_tol, res.u,
                                 res.residual_history, history_stride);
    res.iterations += out.sweeps;
    res.final_residual = out.final_residual;
    if (out.status == SolveStatus::step_unstable) {
      res.status = SolveStatus::step_unstable;
      std::ostringstream os;
      os << "StepUnstable: residual grew 10x at reg_eps = " << sched[s]
         << " (sup |R| = " << out.final_residual << ")";
      res.message = os.str();
      return res;
    }
    if (out.status == SolveStatus::non_convergence && last) {
      res.status = SolveStatus::non_convergence;
      std::ostringstream os;
      os << "NonConvergence: sup |R| = " << out.final_residual << " after "
         << res.iterations << " sweeps (tol " << config.tol << ")";
      res.message = os.str();
      return res;
    }
  }
  res.status = SolveStatus::converged;
  return res;
}

ScalarField beta_zero_initialization(const ProblemSpec& spec, const SolveConfig& config,
                                     const GridSpec& grid, SolveStatus& status,
                                     std::string& message, long& sweeps) {
  ProblemSpec spec0 = spec;
  spec0.law = DegeneracyLaw::zero_law();
  spec0.law.equality_tol = spec.law.equality_tol;
  spec0.reg_eps = grid.h;  // immaterial at beta = 0
  SolveConfig cfg0 = config;
  cfg0.tol = std::max(config.tol, 1e-5);
  SolveResult r0 = solve_on_grid(spec0, cfg0, datum_extension(grid, spec.boundary));
  sweeps += r0.iterations;
  if (r0.status == SolveStatus::step_unstable) {
    status = r0.status;
    message = r0.message;
  }
  return std::move(r0.u);
}

ScalarField prolong(const ScalarField& coarse, const GridSpec& fine,
                    const std::function<double(const Vec&)>& boundary) {
  ScalarField f = ScalarField::zeros(fine);
  fine.for_each([&](const MultiIndex& mi, long id) {
    if (fine.is_interior(mi))
      f.v[id] = interpolate(coarse, fine.point(mi));
    else
      f.v[id] = boundary(fine.point(mi));
  });
  return f;
}

ScalarField restrict_field(const ScalarField& fine, const GridSpec& coarse) {
  // Dyadic chains share node locations; plain injection.
  ScalarField f = ScalarField::zeros(coarse);
  coarse.for_each([&](const MultiIndex& mi, long id) {
    MultiIndex fi = mi;
    for (int k = 0; k < coarse.d; ++k) fi[k] *= 2;
    f.v[id] = fine.at(fi);
  });
  return f;
}

}  // namespace

ScalarField residual(const ProblemSpec& spec, const ScalarField& u) {
  ScalarField r = ScalarField::zeros(u.grid);
  const double reg = spec.resolved_reg_eps(u.grid.h);
  u.grid.for_each_interior([&](const MultiIndex& mi, long id) {
    r.v[id] = eval_node(spec, u, mi, id, reg).R;
  });
  return r;
}

SolveResult solve(const ProblemSpec& spec, const SolveConfig& config) {
  const GridSpec& grid = spec.rhs.grid;
  if (!spec.boundary) throw std::invalid_argument("solve: boundary datum missing");
  if (config.continuation.empty() && spec.reg_eps >= 1e300)
    throw std::invalid_argument("solve: continuation schedule empty");

  // Grid chain for nested iteration: halve (n-1) while the coarse level still
  // resolves the ball.
  std::vector<int> chain{grid.n};
  if (config.cascade) {
    int n = grid.n;
    while ((n - 1) % 2 == 0 && (n - 1) / 2 + 1 >= 17) {
      n = (n - 1) / 2 + 1;
      chain.insert(chain.begin(), n);
    }
  }

  SolveStatus init_status = SolveStatus::converged;
  std::string init_message;
  long total_sweeps = 0;

  ScalarField current;  // iterate on the current chain level
  SolveResult last;
  for (size_t lev = 0; lev < chain.size(); ++lev) {
    GridSpec g = GridSpec::make(grid.d, chain[lev], grid.margin);
    ProblemSpec level_spec = spec;
    level_spec.law.equality_tol = g.h * g.h;
    level_spec.rhs = (g.n == grid.n) ? spec.rhs : restrict_field(spec.rhs, g);
    if (lev == 0) {
      current = beta_zero_initialization(level_spec, config, g, init_status,
                                         init_message, total_sweeps);
      if (init_status == SolveStatus::step_unstable) {
        SolveResult r;
        r.u = std::move(current);
        r.status = init_status;
        r.message = init_message;
        r.iterations = total_sweeps;
        r.final_residual = residual_sup(level_spec, level_spec.resolved_reg_eps(g.h), r.u);
        return r;
      }
    } else {
      current = prolong(current, g, spec.boundary);
    }
    last = solve_on_grid(level_spec, config, std::move(current));
    total_sweeps += last.iterations;
    if (last.status != SolveStatus::converged && g.n != grid.n) {
      // Surface coarse-level failures instead of refining garbage.
      last.iterations = total_sweeps;
      return last;
    }
    current = last.u;
  }
  last.u = std::move(current);
  last.iterations = total_sweeps;
  return last;
}

SolveResult solve_homogeneous(const EllipticOperator& op,
                              const std::function<double(const Vec&)>& boundary,
                              const GridSpec& grid, const SolveConfig& config) {
  ProblemSpec spec;
  spec.op = op;
  spec.law = DegeneracyLaw::zero_law();
  spec.law.equality_tol = grid.h * grid.h;
  spec.rhs = ScalarField::zeros(grid);
  spec.boundary = boundary;
  spec.reg_eps = grid.h;
  return solve(spec, config);
}

Manufactured manufactured_radial(double beta, OperatorKind kind, int d) {
  if (beta < 0.0) throw std::invalid_argument("manufactured_radial: beta must be >= 0");
  if (kind != OperatorKind::negative_trace)
    throw std::invalid_argument("manufactured_radial: only negative_trace is supported");
  Manufactured m;
  m.beta = beta;
  m.alpha = 1.0 / (1.0 + beta);
  m.d = d;
  m.f_value = -std::pow(1.0 + m.alpha, 1.0 + beta) * (m.alpha + d - 1);
  const double expo = 1.0 + m.alpha;
  m.u = [expo, d](const Vec& x) { return std::pow(norm(x, d), expo); };
  const double fv = m.f_value;
  m.f = [fv](const Vec&) { return fv; };
  return m;
}

ProblemSpec manufactured_problem(const Manufactured& m, const GridSpec& grid) {
  ProblemSpec spec;
  spec.op = EllipticOperator::make(OperatorKind::negative_trace, 1.0, 1.0, 1.0, grid.d);
  spec.law = DegeneracyLaw::constant(m.beta);
  spec.law.equality_tol = grid.h * grid.h;
  spec.rhs = ScalarField::constant(grid, m.f_value);
  spec.boundary = m.u;
  return spec;
}

}  // namespace ftlab
