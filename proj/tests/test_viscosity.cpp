#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ftlab/rng.hpp"
#include "ftlab/solver.hpp"
#include "ftlab/viscosity.hpp"

using namespace ftlab;

namespace {

ProblemSpec plain_spec(const GridSpec& grid, double beta, double f_const,
                       std::function<double(const Vec&)> boundary) {
  ProblemSpec spec;
  spec.op = EllipticOperator::make(OperatorKind::negative_trace, 1.0, 1.0);
  spec.law = DegeneracyLaw::constant(beta);
  spec.law.equality_tol = grid.h * grid.h;
  spec.rhs = ScalarField::constant(grid, f_const);
  spec.boundary = std::move(boundary);
  return spec;
}

}  // namespace

TEST_CASE("constant fields produce no envelope violations") {
  GridSpec grid = GridSpec::make(2, 33);
  ProblemSpec spec = plain_spec(grid, 1.0, 0.0, [](const Vec&) { return 0.7; });
  ScalarField u = ScalarField::constant(grid, 0.7);
  CheckConfig cfg;
  cfg.trials = 2000;
  cfg.seed = 2;
  cfg.reg_eps = spec.resolved_reg_eps(grid.h);
  auto sub = check_subsolution_envelope(u, spec, cfg);
  auto sup = check_supersolution_envelope(u, spec, cfg);
  CHECK(sub.violation_count == 0);
  CHECK(sup.violation_count == 0);
  CHECK(sub.touches > 100);
  CHECK(sup.touches > 100);
}

TEST_CASE("solved manufactured fields pass both envelope checks") {
  GridSpec grid = GridSpec::make(2, 65);
  Manufactured m = manufactured_radial(1.0, OperatorKind::negative_trace, 2);
  ProblemSpec spec = manufactured_problem(m, grid);
  SolveConfig scfg;
  scfg.tol = 1e-5;
  scfg.over_relax = 1.8;
  SolveResult res = solve(spec, scfg);
  REQUIRE(res.status == SolveStatus::converged);
  CheckConfig cfg;
  cfg.trials = 4000;
  cfg.seed = 3;
  cfg.reg_eps = spec.resolved_reg_eps(grid.h);
  auto sub = check_subsolution_envelope(res.u, spec, cfg);
  auto sup = check_supersolution_envelope(res.u, spec, cfg);
  CHECK(sub.violation_count == 0);
  CHECK(sup.violation_count == 0);
  // Measured headroom: worst margins stay clearly below the tolerance.
  CHECK(sub.worst_margin < cfg.tol_C * (grid.h + cfg.reg_eps));
  CHECK(sup.worst_margin < cfg.tol_C * (grid.h + cfg.reg_eps));
}

TEST_CASE("negative controls violate the expected side") {
  GridSpec grid = GridSpec::make(2, 65);
  CheckConfig cfg;
  cfg.trials = 4000;
  cfg.seed = 5;

  // u = -|x|^2 with f = 0: F(D^2 u) = +4 and Du != 0 a.e., not a subsolution.
  ProblemSpec spec_neg =
      plain_spec(grid, 1.0, 0.0, [](const Vec& x) { return -dot(x, x, 2); });
  cfg.reg_eps = spec_neg.resolved_reg_eps(grid.h);
  ScalarField uneg = ScalarField::sample(grid, spec_neg.boundary);
  auto sub = check_subsolution_envelope(uneg, spec_neg, cfg);
  CHECK(sub.violation_count >= 1);
  CHECK(sub.worst_margin > sub.tolerance);
  auto sup = check_supersolution_envelope(uneg, spec_neg, cfg);
  CHECK(sup.violation_count == 0);

  // The mirror image fails the supersolution side instead.
  ProblemSpec spec_pos =
      plain_spec(grid, 1.0, 0.0, [](const Vec& x) { return dot(x, x, 2); });
  ScalarField upos = ScalarField::sample(grid, spec_pos.boundary);
  auto sub2 = check_subsolution_envelope(upos, spec_pos, cfg);
  auto sup2 = check_supersolution_envelope(upos, spec_pos, cfg);
  CHECK(sub2.violation_count == 0);
  CHECK(sup2.violation_count >= 1);
}

TEST_CASE("dual symmetry: sub on u equals super on -u under M -> -F(-M)") {
  GridSpec grid = GridSpec::make(2, 33);
  CheckConfig cfg;
  cfg.trials = 2000;
  cfg.seed = 11;

  struct Case {
    std::function<double(const Vec&)> fn;
    OperatorKind kind;
    OperatorKind dual_kind;
  };
  // negative_trace is self-dual; the two Pucci operators swap.
  std::vector<Case> cases = {
      {[](const Vec& x) { return std::sin(2 * x[0]) * x[1]; },
       OperatorKind::negative_trace, OperatorKind::negative_trace},
      {[](const Vec& x) { return std::exp(x[0]) - x[1] * x[1]; },
       OperatorKind::pucci_minus, OperatorKind::pucci_plus},
      {[](const Vec& x) { return std::pow(norm(x, 2), 1.5) - 0.4 * x[0]; },
       OperatorKind::pucci_plus, OperatorKind::pucci_minus},
  };
  for (const auto& c : cases) {
    ProblemSpec spec;
    spec.op = EllipticOperator::make(c.kind, 1.0, 2.0);
    spec.law = DegeneracyLaw::constant(1.0);
    spec.law.equality_tol = grid.h * grid.h;
    spec.rhs = ScalarField::constant(grid, 0.25);
    spec.boundary = c.fn;
    cfg.reg_eps = spec.resolved_reg_eps(grid.h);
    ScalarField u = ScalarField::sample(grid, c.fn);

    ProblemSpec dual = spec;
    dual.op = EllipticOperator::make(c.dual_kind, 1.0, 2.0);
    ScalarField nu = u;
    for (auto& v : nu.v) v = -v;

    auto sub = check_subsolution_envelope(u, spec, cfg);
    auto sup = check_supersolution_envelope(nu, dual, cfg);
    CHECK(sub.touches == sup.touches);
    CHECK(sub.violation_count == sup.violation_count);
    CHECK(sub.worst_margin == doctest::Approx(sup.worst_margin).epsilon(1e-12));
  }
}

TEST_CASE("two-exponent reduction: constant beta_m/beta_M law equals the closed form") {
  GridSpec grid = GridSpec::make(2, 17);
  ProblemSpec spec;
  spec.op = EllipticOperator::make(OperatorKind::negative_trace, 1.0, 1.0);
  spec.law.phases.emplace_back(PhaseRule{PhaseKind::positive_set, -1.0, 0, 0},
                               ExponentField::constant_field(0.5));
  spec.law.complement_beta = ExponentField::constant_field(2.0);
  spec.law.beta_m = 0.5;
  spec.law.beta_M = 2.0;
  spec.rhs = ScalarField::zeros(grid);
  Rng rng(13);
  for (int t = 0; t < 1000; ++t) {
    Vec x{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0};
    Vec grad{rng.uniform(-2, 2), rng.uniform(-2, 2), 0};
    const double Fq = rng.uniform(-5, 5);
    const double via_law = law_envelope(spec, x, grad, Fq, true);
    const double closed =
        two_exponent_envelope_min(norm(grad, 2), Fq, 0.5, 2.0);
    CHECK(via_law == doctest::Approx(closed).epsilon(1e-14));
  }
}

TEST_CASE("homogeneous division: harmonic polynomial passes, bowl fails near -4") {
  GridSpec grid = GridSpec::make(2, 65);
  auto op = EllipticOperator::make(OperatorKind::negative_trace, 1.0, 1.0);
  CheckConfig cfg;
  cfg.trials = 6000;
  cfg.seed = 3;

  ScalarField saddle = ScalarField::sample(grid, [](const Vec& x) {
    return x[0] * x[0] - x[1] * x[1];
  });
  auto rep = check_homogeneous_division(saddle, op, cfg);
  CHECK(rep.pass);
  CHECK(std::abs(rep.above_max_F) <= 10.0 * grid.h);
  CHECK(std::abs(rep.below_min_F) <= 10.0 * grid.h);

  ScalarField aff = ScalarField::sample(grid, [](const Vec& x) { return 1.0 - x[0]; });
  auto rep_aff = check_homogeneous_division(aff, op, cfg);
  CHECK(rep_aff.pass);

  ScalarField bowl = ScalarField::sample(grid, [](const Vec& x) { return dot(x, x, 2); });
  auto rep_bowl = check_homogeneous_division(bowl, op, cfg);
  CHECK(!rep_bowl.pass);
  CHECK(rep_bowl.above_max_F == doctest::Approx(-4.0).epsilon(0.10));
}

TEST_CASE("solver consistency: converged solves pass the envelope checks") {
  // Tolerance constant calibrated on the beta = 0 problem; the other
  // manufactured cases must pass at the same constant.
  for (double beta : {0.0, 2.0}) {
    GridSpec grid = GridSpec::make(2, 65);
    Manufactured m = manufactured_radial(beta, OperatorKind::negative_trace, 2);
    ProblemSpec spec = manufactured_problem(m, grid);
    SolveConfig scfg;
    scfg.tol = 1e-5;
    scfg.over_relax = 1.8;
    SolveResult res = solve(spec, scfg);
    REQUIRE(res.status == SolveStatus::converged);
    CheckConfig cfg;
    cfg.trials = 3000;
    cfg.seed = 17;
    cfg.reg_eps = spec.resolved_reg_eps(grid.h);
    CHECK(check_subsolution_envelope(res.u, spec, cfg).violation_count == 0);
    CHECK(check_supersolution_envelope(res.u, spec, cfg).violation_count == 0);
  }
}
