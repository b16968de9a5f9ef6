#include "ftlab/config.hpp"

#include <cmath>

#include "ftlab/field_io.hpp"

namespace ftlab {

namespace {

double require_number(const nlohmann::json& j, const std::string& key, double dflt,
                      bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError("missing required key: " + key);
    return dflt;
  }
  if (!j.at(key).is_number()) throw ConfigError(key + " must be a number");
  return j.at(key).get<double>();
}

Vec vec_from_json(const nlohmann::json& j, const std::string& key) {
  Vec v{0, 0, 0};
  if (!j.is_array() || j.size() > 3) throw ConfigError(key + " must be an array of <= 3 numbers");
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

ExponentField exponent_from_json(const nlohmann::json& j, const std::string& where) {
  ExponentField f;
  const std::string kind = j.value("kind", "constant");
  if (kind == "constant") {
    f = ExponentField::constant_field(require_number(j, "value", 0.0, true));
  } else if (kind == "gaussian_bump") {
    Vec c{0, 0, 0};
    if (j.contains("center")) c = vec_from_json(j.at("center"), where + ".center");
    f = ExponentField::bump(require_number(j, "amplitude", 0.0, true),
                            require_number(j, "width", 0.0, true), c);
    if (f.width <= 0.0) throw ConfigError(where + ".width must be > 0");
  } else if (kind == "table") {
    f.kind = BetaKind::table;
    f.table = std::make_shared<ScalarField>(field_from_json(j.at("field")));
  } else {
    throw ConfigError(where + ".kind unknown: " + kind);
  }
  return f;
}

}  // namespace

DegeneracyLaw law_from_json(const nlohmann::json& j, double equality_tol, int d) {
  DegeneracyLaw law;
  law.equality_tol = equality_tol;
  law.beta_m = require_number(j, "beta_m", 0.0);
  law.beta_M = require_number(j, "beta_M", 0.0, true);

  bool have_complement = false;
  if (j.contains("phases")) {
    const auto& phases = j.at("phases");
    if (!phases.is_array()) throw ConfigError("law.phases must be an array");
    for (size_t i = 0; i < phases.size(); ++i) {
      const auto& entry = phases[i];
      const auto& pj = entry.at("phase");
      PhaseRule rule;
      rule.kind = phase_kind_from_name(pj.value("kind", ""));
      rule.tolerance = require_number(pj, "tolerance", -1.0);
      rule.lo = require_number(pj, "lo", 0.0);
      rule.hi = require_number(pj, "hi", 1e300);
      ExponentField beta = exponent_from_json(entry.at("beta"), "law.phases.beta");
      if (rule.kind == PhaseKind::complement) {
        if (i + 1 != phases.size())
          throw ConfigError("law.phases: complement entry must be last");
        law.complement_beta = beta;
        have_complement = true;
      } else {
        law.phases.emplace_back(rule, beta);
      }
    }
  }
  if (!have_complement) {
    // Phases left unclaimed carry the lower exponent bound.
    law.complement_beta = ExponentField::constant_field(law.beta_m);
  }

  if (j.contains("modulus")) {
    const auto& mj = j.at("modulus");
    law.modulus.kind = modulus_kind_from_name(mj.value("kind", "zero"));
    law.modulus.p = require_number(mj, "p", 2.0);
    if (law.modulus.kind == ModulusKind::log_power && law.modulus.p <= 0.0)
      throw ConfigError("law.modulus.p must be > 0");
    if (law.modulus.kind == ModulusKind::table) {
      for (const auto& row : mj.at("table"))
        law.modulus.table.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
  }
  law.validate(nullptr, d);
  return law;
}

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& j) {
  ExperimentConfig c;
  c.raw = j;

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.d = static_cast<int>(require_number(g, "d", 2));
    c.n = static_cast<int>(require_number(g, "n", 65));
    c.margin = static_cast<int>(require_number(g, "margin", 1));
  }
  if (c.n < 5 || c.n % 2 == 0) throw ConfigError("grid.n must be odd >= 5");
  if (c.d < 1 || c.d > 3) throw ConfigError("grid.d must be 1, 2 or 3");

  if (j.contains("operator")) {
    const auto& o = j.at("operator");
    c.op_kind = operator_kind_from_name(o.value("kind", "negative_trace"));
    c.lambda = require_number(o, "lambda", 1.0);
    c.Lambda = require_number(o, "Lambda", 1.0);
    c.alpha0 = require_number(o, "alpha0", -1.0);
    if (!(c.lambda > 0.0)) throw ConfigError("operator.lambda must be > 0");
    if (c.Lambda < c.lambda) throw ConfigError("operator.Lambda must be >= lambda");
  }

  c.law_json = j.value("law", nlohmann::json::object());
  if (!c.law_json.contains("beta_M")) {
    // Constant-law shorthand: {"law": {"beta": 1.0}}; other keys (modulus)
    // pass through.
    if (c.law_json.contains("beta")) {
      const double b = c.law_json.at("beta").get<double>();
      c.law_json["beta_m"] = b;
      c.law_json["beta_M"] = b;
      c.law_json["phases"] = {{{"phase", {{"kind", "complement"}}},
                               {"beta", {{"kind", "constant"}, {"value", b}}}}};
      c.law_json.erase("beta");
    } else {
      c.law_json["beta_m"] = 0.0;
      c.law_json["beta_M"] = 0.0;
    }
  }

  if (j.contains("rhs")) {
    const auto& r = j.at("rhs");
    const std::string kind = r.value("kind", "manufactured");
    if (kind == "constant") c.rhs_kind = RhsKind::constant;
    else if (kind == "manufactured") c.rhs_kind = RhsKind::manufactured;
    else if (kind == "table") c.rhs_kind = RhsKind::table;
    else throw ConfigError("rhs.kind unknown: " + kind);
    c.rhs_value = require_number(r, "value", 0.0);
    if (c.rhs_kind == RhsKind::table) c.rhs_table = r.at("field");
  }

  if (j.contains("boundary")) {
    const auto& b = j.at("boundary");
    const std::string kind = b.value("kind", "manufactured");
    if (kind == "manufactured") c.boundary_kind = BoundaryKind::manufactured;
    else if (kind == "polynomial") c.boundary_kind = BoundaryKind::polynomial;
    else if (kind == "table") c.boundary_kind = BoundaryKind::table;
    else throw ConfigError("boundary.kind unknown: " + kind);
    c.poly_c0 = require_number(b, "const", 0.0);
    if (b.contains("linear")) c.poly_lin = vec_from_json(b.at("linear"), "boundary.linear");
    if (b.contains("quad")) {
      const auto& q = b.at("quad");
      c.poly_quad = SymMat::zero(c.d);
      for (int i = 0; i < c.d; ++i)
        for (int k = 0; k < c.d; ++k) {
          const double v = q.at(i).at(k).get<double>();
          if (k >= i) c.poly_quad.set(i, k, v);
          else if (std::abs(v - c.poly_quad(k, i)) > 1e-12)
            throw ConfigError("boundary.quad must be symmetric");
        }
    }
    if (c.boundary_kind == BoundaryKind::table) c.boundary_table = b.at("field");
  }

  if (j.contains("shift")) c.shift = vec_from_json(j.at("shift"), "shift");

  if (j.contains("solve")) {
    const auto& s = j.at("solve");
    c.solve.step_factor = require_number(s, "step_factor", 1.0);
    c.solve.step_abs = require_number(s, "step_abs", -1.0);
    c.solve.over_relax = require_number(s, "over_relax", 1.5);
    if (!(c.solve.over_relax > 0.0 && c.solve.over_relax < 2.0))
      throw ConfigError("solve.over_relax must lie in (0, 2)");
    c.solve.tol = require_number(s, "tol", 1e-6);
    c.solve.max_iters = static_cast<long>(require_number(s, "max_iters", 200000));
    c.solve.cascade = s.value("cascade", true);
    if (s.contains("continuation"))
      for (const auto& e : s.at("continuation")) c.solve.continuation.push_back(e.get<double>());
    c.reg_eps = require_number(s, "reg_eps", -1.0);
    if (!(c.solve.tol > 0.0)) throw ConfigError("solve.tol must be > 0");
    if (c.solve.max_iters < 1) throw ConfigError("solve.max_iters must be >= 1");
  }

  if (j.contains("certify")) {
    const auto& ce = j.at("certify");
    if (ce.contains("points")) {
      for (const auto& p : ce.at("points"))
        c.certify.points.push_back(vec_from_json(p, "certify.points"));
    }
    c.certify.lattice_n = static_cast<int>(require_number(ce, "lattice_n", 5));
    c.certify.lattice_radius = require_number(ce, "lattice_radius", 0.5);
    c.certify.rho = require_number(ce, "rho", 0.5);
    c.certify.eta = require_number(ce, "eta", 0.01);
    c.certify.kmax = static_cast<int>(require_number(ce, "kmax", 5));
    c.certify.eps0 = require_number(ce, "eps0", 1.0);
    c.certify.K = require_number(ce, "K", -1.0);
    c.certify.match_tol = require_number(ce, "match_tol", 0.07);
    const std::string fk = ce.value("field", "solve");
    if (fk == "solve") c.certify.field = CertifyFieldKind::solve;
    else if (fk == "exact") c.certify.field = CertifyFieldKind::exact;
    else if (fk == "pointwise_profile") c.certify.field = CertifyFieldKind::pointwise_profile;
    else throw ConfigError("certify.field unknown: " + fk);
    if (!(c.certify.rho > 0.0 && c.certify.rho < 1.0))
      throw ConfigError("certify.rho must lie in (0, 1)");
    if (!(c.certify.eps0 > 0.0)) throw ConfigError("certify.eps0 must be > 0");
  }

  if (j.contains("check")) {
    const auto& ck = j.at("check");
    c.check.trials = static_cast<long>(require_number(ck, "trials", 10000));
    c.check.window = static_cast<int>(require_number(ck, "window", 5));
    c.check.Q_max = require_number(ck, "Q_max", 10.0);
    c.check.tol_C = require_number(ck, "tol_C", 4.0);
  }

  if (j.contains("modulus") && j.at("modulus").contains("eps_list")) {
    c.modulus_eps_list.clear();
    for (const auto& e : j.at("modulus").at("eps_list"))
      c.modulus_eps_list.push_back(e.get<double>());
  }
  if (j.contains("approx") && j.at("approx").contains("eps_schedule")) {
    c.approx_eps_schedule.clear();
    for (const auto& e : j.at("approx").at("eps_schedule"))
      c.approx_eps_schedule.push_back(e.get<double>());
  }
  if (j.contains("sweep")) {
    c.sweep_command = j.at("sweep").value("command", "");
    c.sweep_vary = j.at("sweep").value("vary", nlohmann::json::object());
  }

  c.seed = static_cast<uint64_t>(require_number(j, "seed", 0.0));
  c.threads = static_cast<int>(require_number(j, "threads", 1.0));
  c.out_dir = j.value("out", "out");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  return c;
}

std::string ExperimentConfig::config_hash() const { return hash_hex(fnv1a(raw.dump())); }

GridSpec ExperimentConfig::make_grid() const { return GridSpec::make(d, n, margin); }

EllipticOperator ExperimentConfig::make_operator() const {
  try {
    return EllipticOperator::make(op_kind, lambda, Lambda, alpha0, d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

DegeneracyLaw ExperimentConfig::make_law(const GridSpec& grid) const {
  try {
    return law_from_json(law_json, grid.h * grid.h, grid.d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Manufactured ExperimentConfig::make_manufactured(const GridSpec& grid) const {
  DegeneracyLaw law = make_law(grid);
  if (!law.phases.empty() || law.complement_beta.kind != BetaKind::constant)
    throw ConfigError("rhs.kind manufactured requires a constant-exponent law");
  try {
    return manufactured_radial(law.complement_beta.value, op_kind, grid.d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ScalarField ExperimentConfig::make_rhs(const GridSpec& grid) const {
  switch (rhs_kind) {
    case RhsKind::constant: return ScalarField::constant(grid, rhs_value);
    case RhsKind::manufactured: {
      Manufactured m = make_manufactured(grid);
      return ScalarField::constant(grid, m.f_value);
    }
    case RhsKind::table: {
      ScalarField t = field_from_json(rhs_table);
      if (t.grid.same_layout(grid)) return t;
      return ScalarField::sample(grid, [t](const Vec& x) { return interpolate(t, x); });
    }
  }
  throw ConfigError("rhs.kind invalid");
}

std::function<double(const Vec&)> ExperimentConfig::make_boundary(const GridSpec& grid) const {
  switch (boundary_kind) {
    case BoundaryKind::manufactured: {
      Manufactured m = make_manufactured(grid);
      return m.u;
    }
    case BoundaryKind::polynomial: {
      const double c0 = poly_c0;
      const Vec lin = poly_lin;
      const SymMat quad = poly_quad;
      const int dd = d;
      return [c0, lin, quad, dd](const Vec& x) {
        double v = c0 + dot(lin, x, dd);
        for (int i = 0; i < dd; ++i)
          for (int j = 0; j < dd; ++j) v += 0.5 * x[i] * quad(i, j) * x[j];
        return v;
      };
    }
    case BoundaryKind::table: {
      auto t = std::make_shared<ScalarField>(field_from_json(boundary_table));
      return [t](const Vec& x) { return interpolate(*t, x); };
    }
  }
  throw ConfigError("boundary.kind invalid");
}

ProblemSpec ExperimentConfig::make_problem(const GridSpec& grid) const {
  ProblemSpec spec;
  spec.op = make_operator();
  spec.law = make_law(grid);
  spec.rhs = make_rhs(grid);
  spec.boundary = make_boundary(grid);
  spec.shift = shift;
  spec.reg_eps = reg_eps;
  return spec;
}

}  // namespace ftlab
