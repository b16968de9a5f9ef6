#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ftlab/regularity.hpp"
#include "ftlab/rng.hpp"
#include "ftlab/solver.hpp"

using namespace ftlab;

TEST_CASE("normalize: smallness-regime scaling") {
  GridSpec g = GridSpec::make(2, 17);
  // |u| = 3, |f| = eps0  ->  K = 1/4.
  ScalarField u = ScalarField::constant(g, 3.0);
  ScalarField f = ScalarField::constant(g, 0.5);
  auto nm = normalize(u, f, 0.5);
  CHECK(nm.K == doctest::Approx(0.25));
  CHECK(nm.u_bar.sup_interior() == doctest::Approx(0.75));
  CHECK(nm.f_bar.sup_interior() <= 0.5 + 1e-15);

  // Already small: K = 1.
  ScalarField u2 = ScalarField::constant(g, 0.5);
  ScalarField f2 = ScalarField::constant(g, 0.25);
  auto nm2 = normalize(u2, f2, 0.5);
  CHECK(nm2.K == 1.0);

  // Zero data: K = 1, u_bar = 0.
  auto nm3 = normalize(ScalarField::zeros(g), ScalarField::zeros(g), 1.0);
  CHECK(nm3.K == 1.0);
  CHECK(nm3.u_bar.sup_interior() == 0.0);

  CHECK_THROWS_AS(normalize(u, f, 0.0), std::invalid_argument);
}

TEST_CASE("property: normalize guarantees |u_bar| <= 1 and |f_bar| <= eps0") {
  Rng rng(21);
  GridSpec g = GridSpec::make(2, 9);
  for (int t = 0; t < 200; ++t) {
    const double su = rng.uniform(0, 10), sf = rng.uniform(0, 10);
    const double eps0 = rng.uniform(0.01, 2.0);
    ScalarField u = ScalarField::sample(g, [&](const Vec& x) { return su * std::sin(3 * x[0]); });
    ScalarField f = ScalarField::sample(g, [&](const Vec& x) { return sf * std::cos(2 * x[1]); });
    auto nm = normalize(u, f, eps0);
    CHECK(nm.K <= 1.0);
    CHECK(nm.u_bar.sup_interior() <= 1.0 + 1e-12);
    CHECK(nm.f_bar.sup_interior() <= eps0 * (1.0 + 1e-12));
  }
}

TEST_CASE("alpha_sequence: constant laws") {
  DegeneracyLaw one = DegeneracyLaw::constant(1.0);
  auto a = alpha_sequence(one, {0, 0, 0}, 0.5, 1.0, 0.01, 6, nullptr);
  for (double v : a) CHECK(v == doctest::Approx(0.5));

  DegeneracyLaw zero = DegeneracyLaw::zero_law();
  auto a0 = alpha_sequence(zero, {0, 0, 0}, 0.5, 1.0, 0.01, 6, nullptr);
  for (double v : a0) CHECK(v == doctest::Approx(0.99));
}

TEST_CASE("alpha_sequence: gaussian bump climbs to 1/3 at the origin") {
  DegeneracyLaw law;
  law.complement_beta = ExponentField::bump(2.0, 0.1);
  law.beta_m = 0.0;
  law.beta_M = 2.0;
  auto a = alpha_sequence(law, {0, 0, 0}, 0.5, 1.0, 0.01, 8, nullptr);
  // The center value beta(0) = 2 dominates every ball around the origin.
  for (double v : a) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  // Off-center the sequence is nondecreasing and k (alpha - alpha_k) -> 0.
  const Vec x0{0.3, 0, 0};
  auto b = alpha_sequence(law, x0, 0.5, 1.0, 0.01, 12, nullptr);
  const double alpha = predicted_pointwise(law, x0, 1.0, 0.01, 2);
  for (size_t k = 1; k < b.size(); ++k) CHECK(b[k] >= b[k - 1] - 1e-12);
  CHECK(std::abs(b.back() - alpha) < 1e-3);
  double prev = 1e300;
  for (size_t k = 4; k < b.size(); ++k) {
    const double v = k * (alpha - b[k]);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("property: alpha_sequence is nondecreasing for random bump laws") {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    DegeneracyLaw law;
    const double amp = rng.uniform(0.1, 3.0);
    law.complement_beta = ExponentField::bump(
        amp, rng.uniform(0.05, 0.5),
        {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0});
    law.beta_m = 0.0;
    law.beta_M = amp;
    Vec x0{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), 0};
    auto a = alpha_sequence(law, x0, rng.uniform(0.3, 0.7), 1.0, 0.01, 10, nullptr);
    for (size_t k = 1; k < a.size(); ++k) CHECK(a[k] >= a[k - 1] - 1e-12);
    CHECK(a.back() <= predicted_pointwise(law, x0, 1.0, 0.01, 2) + 1e-9);
  }
}

TEST_CASE("alpha_sequence stays below the gap bound for admissible ratios") {
  // Bump exponent with a declared Lipschitz-capped table modulus; at any
  // rho <= delta1 the discrete sequence obeys k (alpha - alpha_k) <= gap.
  DegeneracyLaw law;
  law.complement_beta = ExponentField::bump(2.0, 0.1);
  law.beta_m = 0.0;
  law.beta_M = 2.0;
  law.modulus.kind = ModulusKind::table;
  // Lipschitz bound of the bump: amplitude / (width sqrt(e)) ~ 12.2.
  law.modulus.table = {{0.0, 0.0}, {2.0 / 12.2, 2.0}, {10.0, 2.0}};
  const Vec x0{0.3, 0, 0};
  const double alpha0 = 1.0, eta = 0.01;
  const double alpha = predicted_pointwise(law, x0, alpha0, eta, 2);
  const double gap = 0.5 * (alpha0 - alpha);
  auto thr = max_admissible_ratio(law.modulus, gap);
  REQUIRE(thr.admissible);
  auto a = alpha_sequence(law, x0, thr.rho, alpha0, eta, 20, nullptr);
  for (size_t k = 1; k < a.size(); ++k) {
    CHECK(k * (alpha - a[k]) <= gap * (1.0 + 1e-9));
  }
}

TEST_CASE("predicted exponents") {
  DegeneracyLaw one = DegeneracyLaw::constant(1.0);
  CHECK(predicted_pointwise(one, {0, 0, 0}, 1.0, 0.01, 2) == doctest::Approx(0.5));
  CHECK(predicted_local(1.0, 1.0, 0.01) == doctest::Approx(0.5));
  CHECK(predicted_local(1000.0, 1.0, 0.01) == doctest::Approx(1.0 / 1001.0));
  CHECK(predicted_local(0.0, 1.0, 0.01) == doctest::Approx(0.99));

  // Sharp pointwise bump: 1000 exp(-|1000 x|^2 / 2).
  DegeneracyLaw big;
  big.complement_beta = ExponentField::bump(1000.0, 1e-3);
  big.beta_m = 0.0;
  big.beta_M = 1000.0;
  CHECK(predicted_pointwise(big, {0, 0, 0}, 1.0, 0.01, 2) ==
        doctest::Approx(1.0 / 1001.0).epsilon(1e-12));
  CHECK(predicted_pointwise(big, {0.01, 0, 0}, 1.0, 0.01, 2) ==
        doctest::Approx(0.99));

  // Two-phase sign law at a free-boundary point: the minimum over phases.
  DegeneracyLaw sign;
  sign.phases.emplace_back(PhaseRule{PhaseKind::positive_set, -1.0, 0, 0},
                           ExponentField::constant_field(1.0));
  sign.phases.emplace_back(PhaseRule{PhaseKind::negative_set, -1.0, 0, 0},
                           ExponentField::constant_field(2.0));
  sign.complement_beta = ExponentField::constant_field(0.0);
  sign.beta_m = 0.0;
  sign.beta_M = 2.0;
  CHECK(predicted_pointwise(sign, {0.1, 0.1, 0}, 1.0, 0.01, 2) ==
        doctest::Approx(1.0 / 3.0));
  // Active-phase variant counts only the phase the data selects.
  CHECK(predicted_pointwise_active(sign, {0.1, 0.1, 0}, 0.5, {1, 0, 0}, 1.0, 0.01, 2) ==
        doctest::Approx(0.5));
  CHECK(predicted_pointwise_active(sign, {0.1, 0.1, 0}, -0.5, {1, 0, 0}, 1.0, 0.01, 2) ==
        doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iterate on the normalized manufactured field") {
  GridSpec g = GridSpec::make(2, 257);
  Manufactured m = manufactured_radial(1.0, OperatorKind::negative_trace, 2);
  ScalarField u = ScalarField::sample(g, m.u);
  ScalarField f = ScalarField::constant(g, m.f_value);
  auto nm = normalize(u, f, 1.0);
  CHECK(nm.K == doctest::Approx(0.2292).epsilon(1e-3));

  DegeneracyLaw law = DegeneracyLaw::constant(1.0);
  law.equality_tol = g.h * g.h;
  auto it = iterate(FieldView::of(nm.u_bar), {0, 0, 0}, 0.5, law, 1.0, 0.01, 2.0, 6);
  CHECK(it.kmax_used == 6);
  CHECK(it.all_sup_ok);
  CHECK(it.K_star <= 2.0);
  CHECK(it.K_star == doctest::Approx(0.2292).epsilon(0.02));  // measured: the k = 0 row |u| dominates
  CHECK(it.coef_constant <= 4.0 * it.K_star);
  CHECK(it.rho_admissible);  // constant law: zero modulus
  for (const auto& row : it.rows) {
    CHECK(row.alpha_k == doctest::Approx(0.5));
    CHECK(row.sup_err <= 2.0 * row.bound_unit);
  }
}

TEST_CASE("iterate: affine fields give zero rows for any K") {
  GridSpec g = GridSpec::make(2, 129);
  ScalarField u = ScalarField::sample(g, [](const Vec& x) { return 0.3 * x[0] - x[1]; });
  DegeneracyLaw law = DegeneracyLaw::constant(1.0);
  law.equality_tol = g.h * g.h;
  auto it = iterate(FieldView::of(u), {0, 0, 0}, 0.5, law, 1.0, 0.01, 1e-6, 5);
  CHECK(it.all_sup_ok);
  for (const auto& row : it.rows) CHECK(row.sup_err <= 1e-12);
}

TEST_CASE("iterate: mismatched growth fails rows against the matched constant") {
  GridSpec g = GridSpec::make(2, 257);
  ScalarField u = ScalarField::sample(g, [](const Vec& x) {
    return std::pow(norm(x, 2), 1.2);
  });
  DegeneracyLaw law = DegeneracyLaw::constant(1.0);  // claims exponent 1.5 growth
  law.equality_tol = g.h * g.h;
  auto it = iterate(FieldView::of(u), {0, 0, 0}, 0.5, law, 1.0, 0.01, 0.115, 6);
  CHECK(!it.all_sup_ok);
  int failing = 0;
  for (const auto& row : it.rows) failing += row.sup_ok ? 0 : 1;
  CHECK(failing >= 1);
}

TEST_CASE("iterate raises when fewer than 3 radii resolve") {
  GridSpec g = GridSpec::make(2, 9);
  ScalarField u = ScalarField::sample(g, [](const Vec& x) { return dot(x, x, 2); });
  DegeneracyLaw law = DegeneracyLaw::zero_law();
  law.equality_tol = g.h * g.h;
  CHECK_THROWS_WITH_AS(
      (void)iterate(FieldView::of(u), {0, 0, 0}, 0.5, law, 1.0, 0.01, 1.0, 5),
      "RadiusUnderResolved: fewer than 3 resolvable iteration rows",
      std::runtime_error);
}

TEST_CASE("estimate_exponent on |x|^{3/2} and the smooth/degenerate cases") {
  GridSpec g = GridSpec::make(2, 513);
  ScalarField u = ScalarField::sample(g, [](const Vec& x) {
    return std::pow(norm(x, 2), 1.5);
  });
  auto fit = estimate_exponent(FieldView::of(u), {0, 0, 0}, 0.5, 6);
  CHECK(!fit.degenerate);
  CHECK(fit.alpha_hat >= 0.45);
  CHECK(fit.alpha_hat <= 0.55);
  CHECK(norm(fit.b_limit, 2) <= 1e-6);
  CHECK(fit.r2 >= 0.999);

  // Quadratics saturate the report at 1.
  ScalarField q = ScalarField::sample(g, [](const Vec& x) {
    return x[0] * x[0] + 0.5 * x[1] * x[1];
  });
  auto fq = estimate_exponent(FieldView::of(q), {0, 0, 0}, 0.5, 5);
  CHECK(fq.alpha_hat >= 0.99);
  CHECK(fq.alpha_hat <= 1.0);  // capped
  CHECK(fq.alpha_raw == doctest::Approx(1.0).epsilon(0.01));

  // Affine data: every fit error is at round-off, no usable rows.
  ScalarField aff = ScalarField::sample(g, [](const Vec& x) { return 1.0 + x[0]; });
  auto fa = estimate_exponent(FieldView::of(aff), {0, 0, 0}, 0.5, 5);
  CHECK(fa.degenerate);
}

TEST_CASE("property: estimate_exponent is affine-shift invariant and scale equivariant") {
  GridSpec g = GridSpec::make(2, 257);
  Rng rng(55);
  ScalarField base = ScalarField::sample(g, [](const Vec& x) {
    return std::pow(norm(x, 2), 1.4);
  });
  auto fit0 = estimate_exponent(FieldView::of(base), {0, 0, 0}, 0.5, 5);
  for (int t = 0; t < 5; ++t) {
    const double a = rng.uniform(-2, 2), bx = rng.uniform(-2, 2), by = rng.uniform(-2, 2);
    const double s = rng.uniform(0.2, 5.0);
    ScalarField mod = base;
    g.for_each([&](const MultiIndex& mi, long id) {
      const Vec x = g.point(mi);
      mod.v[id] = s * base.v[id] + a + bx * x[0] + by * x[1];
    });
    auto fit = estimate_exponent(FieldView::of(mod), {0, 0, 0}, 0.5, 5);
    CHECK(fit.alpha_hat == doctest::Approx(fit0.alpha_hat).epsilon(1e-6));
  }
}

TEST_CASE("rescale: identity at k = 0 and self-similarity of the radial profile") {
  GridSpec g = GridSpec::make(2, 257);
  ScalarField u = ScalarField::sample(g, [](const Vec& x) {
    return std::pow(norm(x, 2), 1.5);
  });
  auto op = EllipticOperator::make(OperatorKind::negative_trace, 1.0, 1.0);

  auto rs0 = rescale(u, {0, 0, 0}, AffineMap{}, 0.5, 0, 0.5, op, 65);
  GridSpec g65 = GridSpec::make(2, 65);
  g65.for_each_interior([&](const MultiIndex& mi, long id) {
    CHECK(rs0.v.v[id] ==
          doctest::Approx(std::pow(norm(g65.point(mi), 2), 1.5)).epsilon(1e-8));
  });
  CHECK(rs0.op.kind == op.kind);

  // v_k = |y|^{3/2} - 1/2 for every k: the profile is scale-invariant under
  // the (1 + alpha) scaling.
  for (int k : {1, 2, 3}) {
    auto fit = best_affine(FieldView::of(u), {0, 0, 0}, std::pow(0.5, k));
    auto rs = rescale(u, {0, 0, 0}, fit.ell, 0.5, k, 0.5, op, 65);
    CHECK(rs.sup_norm <= 1.0 + 1e-6);
    double worst = 0.0;
    g65.for_each_interior([&](const MultiIndex& mi, long id) {
      const double want = std::pow(norm(g65.point(mi), 2), 1.5) - 0.5;
      worst = std::max(worst, std::abs(rs.v.v[id] - want));
    });
    CHECK(worst <= 7e-3);
    auto fit_v = estimate_exponent(FieldView::of(rs.v), {0, 0, 0}, 0.5, 4);
    CHECK(fit_v.alpha_hat == doctest::Approx(0.5).epsilon(0.1));  // +-0.05 window
  }

  // Pucci kinds: the conjugated operator is the operator itself.
  auto pm = EllipticOperator::make(OperatorKind::pucci_minus, 1.0, 2.0);
  auto fit1 = best_affine(FieldView::of(u), {0, 0, 0}, 0.5);
  auto rsp = rescale(u, {0, 0, 0}, fit1.ell, 0.5, 1, 0.5, pm, 65);
  CHECK(rsp.op.kind == OperatorKind::pucci_minus);
  CHECK(rsp.op.eval(SymMat::zero(2)) == 0.0);
}

TEST_CASE("rescale rejects under-resolved balls") {
  GridSpec g = GridSpec::make(2, 17);
  ScalarField u = ScalarField::sample(g, [](const Vec& x) { return dot(x, x, 2); });
  auto op = EllipticOperator::make(OperatorKind::negative_trace, 1.0, 1.0);
  CHECK_THROWS_AS(rescale(u, {0, 0, 0}, AffineMap{}, 0.5, 4, 0.5, op, 33),
                  std::runtime_error);
}

TEST_CASE("holder seminorm examples") {
  GridSpec g = GridSpec::make(2, 129);
  ScalarField aff = ScalarField::sample(g, [](const Vec& x) { return x[0]; });
  CHECK(holder_seminorm(aff, 1.0, {0, 0, 0}, 0.6, 1) == doctest::Approx(1.0).epsilon(1e-9));

  ScalarField sq = ScalarField::sample(g, [](const Vec& x) {
    return std::sqrt(norm(x, 2));
  });
  CHECK(holder_seminorm(sq, 0.5, {0, 0, 0}, 0.6, 1) == doctest::Approx(1.0).epsilon(0.02));

  ScalarField c = ScalarField::constant(g, 2.0);
  CHECK(holder_seminorm(c, 0.5, {0, 0, 0}, 0.6, 1) == 0.0);

  CHECK_THROWS_AS(holder_seminorm(c, 0.0, {0, 0, 0}, 0.6, 1), std::invalid_argument);
}

TEST_CASE("property: iterate coefficient increments obey the c(d) K bound") {
  // Rows that satisfy the sup bound force Cauchy coefficient increments with
  // constant at most 4 K* at rho = 1/2.
  Rng rng(66);
  GridSpec g = GridSpec::make(2, 129);
  DegeneracyLaw law = DegeneracyLaw::zero_law();
  law.equality_tol = g.h * g.h;
  for (int t = 0; t < 8; ++t) {
    const double w = rng.uniform(0.5, 3.0);
    const double ph = rng.uniform(0, 3);
    ScalarField u = ScalarField::sample(g, [&](const Vec& x) {
      return std::sin(w * x[0] + ph) * std::cos(w * x[1]) * 0.5;
    });
    auto it = iterate(FieldView::of(u), {0, 0, 0}, 0.5, law, 1.0, 0.01, 1e300, 5);
    CHECK(it.coef_constant <= 4.0 * std::max(it.K_star, 1e-12) * (1.0 + 1e-9));
  }
}

TEST_CASE("rescale-then-estimate returns the exponent of the source point") {
  GridSpec g = GridSpec::make(2, 257);
  for (double expo : {1.3, 1.5, 1.7}) {
    ScalarField u = ScalarField::sample(g, [&](const Vec& x) {
      return std::pow(norm(x, 2), expo);
    });
    auto direct = estimate_exponent(FieldView::of(u), {0, 0, 0}, 0.5, 5);
    const double alpha_k = expo - 1.0;
    auto fit1 = best_affine(FieldView::of(u), {0, 0, 0}, 0.5);
    auto rs = rescale(u, {0, 0, 0}, fit1.ell, 0.5, 1, alpha_k,
                      EllipticOperator::make(OperatorKind::negative_trace, 1.0, 1.0), 129);
    auto inner = estimate_exponent(FieldView::of(rs.v), {0, 0, 0}, 0.5, 5);
    CHECK(std::abs(inner.alpha_hat - direct.alpha_hat) <= 0.05);
  }
}
