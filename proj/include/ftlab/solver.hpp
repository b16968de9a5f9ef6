#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ftlab/degeneracy.hpp"
#include "ftlab/elliptic.hpp"
#include "ftlab/grid.hpp"

namespace ftlab {

/// Discrete problem |Du + p|^{beta(x,u,Du)} F(D^2 u) = f with Dirichlet data
/// on the non-interior nodes. reg_eps < 0 requests the resolution-matched
/// default h^{2/(2+beta_M)}, which balances the smooth regularization's
/// global O(eps^2) bias against the O(h^2 / eps^beta) defect at degenerate
/// nodes; it degrades to h at beta_M = 0.
struct ProblemSpec {
  EllipticOperator op;
  DegeneracyLaw law;
  ScalarField rhs;
  std::function<double(const Vec&)> boundary;
  Vec shift{0, 0, 0};
  double reg_eps = -1.0;

  double resolved_reg_eps(double h) const {
    if (reg_eps >= 0.0) return reg_eps;
    return std::pow(h, 2.0 / (2.0 + law.beta_M));
  }
};

struct SolveConfig {
  double step_factor = 1.0;   // tau = step_factor * h^2 / (2 d Lambda), <= 1 stable
  double step_abs = -1.0;     // absolute tau override (used by stability tests)
  double over_relax = 1.5;    // SOR weight on the Gauss-Seidel update, in (0, 2)
  double tol = 1e-6;          // sup-norm residual target
  long max_iters = 200000;    // sweep budget per continuation stage
  std::vector<double> continuation;  // reg_eps schedule; empty = auto
  bool cascade = true;        // coarse-to-fine nested iteration
  int history_max = 400;      // residual history samples kept

  double step(double h, int d, double Lambda) const {
    if (step_abs > 0.0) return step_abs;
    return step_factor * h * h / (2.0 * d * Lambda);
  }
};

enum class SolveStatus { converged, non_convergence, step_unstable };

struct SolveResult {
  ScalarField u;
  long iterations = 0;        // total Gauss-Seidel sweeps
  double final_residual = 0.0;
  SolveStatus status = SolveStatus::converged;
  std::string message;
  std::vector<double> residual_history;  // downsampled sup |R|
  std::vector<double> reg_schedule;      // continuation actually used
};

/// Pointwise residual R = (|Du+p|^2 + eps^2)^{beta/2} F(D^2 u) - f at
/// interior nodes (zero elsewhere). Vanishes at exact discrete solutions of
/// the regularized equation.
ScalarField residual(const ProblemSpec& spec, const ScalarField& u);

/// Pseudo-time relaxation with continuation in reg_eps, initialized from the
/// beta = 0 solve of the same data. Gauss-Seidel sweeps apply
/// u_i <- u_i - (tau / g_i) R_i, the degeneracy-preconditioned first-order
/// flow; fixed points are exactly the discrete solutions.
SolveResult solve(const ProblemSpec& spec, const SolveConfig& config);

/// F(D^2 h) = 0 with given Dirichlet data (beta = 0, f = 0 path of solve).
SolveResult solve_homogeneous(const EllipticOperator& op,
                              const std::function<double(const Vec&)>& boundary,
                              const GridSpec& grid, const SolveConfig& config);

/// Closed-form radial solution u = |x|^{1+alpha}, alpha = 1/(1+beta), with
/// constant right-hand side f = -(1+alpha)^{1+beta} (alpha + d - 1); the pair
/// satisfies |Du|^beta F(D^2 u) = f away from the origin for F = -tr.
struct Manufactured {
  double beta = 0.0;
  double alpha = 1.0;
  double f_value = 0.0;
  int d = 2;
  std::function<double(const Vec&)> u;
  std::function<double(const Vec&)> f;
};

Manufactured manufactured_radial(double beta, OperatorKind kind, int d);

/// Assembles the grid problem for a manufactured run: exact Dirichlet trace,
/// constant rhs, complement-only constant law.
ProblemSpec manufactured_problem(const Manufactured& m, const GridSpec& grid);

}  // namespace ftlab
