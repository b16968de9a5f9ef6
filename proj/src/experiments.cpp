#include "ftlab/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include "ftlab/field_io.hpp"
#include "ftlab/regularity.hpp"
#include "ftlab/rng.hpp"
#include "ftlab/viscosity.hpp"

namespace ftlab {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

nlohmann::json stamp(const ExperimentConfig& cfg, nlohmann::json j) {
  j["config_hash"] = cfg.config_hash();
  j["version"] = kArtifactVersion;
  return j;
}

nlohmann::json solve_diagnostics(const ExperimentConfig& cfg, const SolveResult& res) {
  nlohmann::json j;
  j["status"] = res.status == SolveStatus::converged
                    ? "converged"
                    : (res.status == SolveStatus::non_convergence ? "non_convergence"
                                                                  : "step_unstable");
  j["iterations"] = res.iterations;
  j["final_residual"] = res.final_residual;
  j["message"] = res.message;
  j["residual_history"] = res.residual_history;
  j["reg_eps_schedule"] = res.reg_schedule;
  return stamp(cfg, j);
}

int status_code(const SolveResult& res) {
  return res.status == SolveStatus::converged ? kExitOk : kExitNumerical;
}

std::vector<Vec> certify_point_list(const ExperimentConfig& cfg) {
  if (!cfg.certify.points.empty()) return cfg.certify.points;
  std::vector<Vec> pts;
  const int m = cfg.certify.lattice_n;
  const double r = cfg.certify.lattice_radius;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < (cfg.d >= 2 ? m : 1); ++j) {
      Vec p{0, 0, 0};
      p[0] = m == 1 ? 0.0 : -r + 2.0 * r * i / (m - 1);
      if (cfg.d >= 2) p[1] = m == 1 ? 0.0 : -r + 2.0 * r * j / (m - 1);
      pts.push_back(p);
    }
  return pts;
}

nlohmann::json record_to_json(const CertifyRecord& r) {
  nlohmann::json j;
  j["point"] = {r.point[0], r.point[1], r.point[2]};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"k", row.k},
                    {"radius", row.radius},
                    {"alpha_k", row.alpha_k},
                    {"a", row.ell.a},
                    {"b", {row.ell.b[0], row.ell.b[1], row.ell.b[2]}},
                    {"sup_err", row.sup_err},
                    {"bound_unit", row.bound_unit},
                    {"da", row.da},
                    {"db", row.db},
                    {"ls_gap", row.ls_gap},
                    {"sup_ok", row.sup_ok}});
  }
  j["rows"] = rows;
  j["predicted_alpha"] = r.predicted;
  j["predicted_alpha_active"] = r.predicted_active;
  j["predicted_local"] = r.predicted_local;
  j["fitted_alpha"] = r.fitted;
  j["fit_degenerate"] = r.fit_degenerate;
  j["r2"] = r.r2;
  j["K_star"] = r.K_star;
  j["coef_constant"] = r.coef_constant;
  j["delta1"] = r.delta1;
  j["rho_admissible"] = r.rho_admissible;
  j["grid_feasible"] = r.grid_feasible;
  j["theta"] = r.theta;
  j["theta_seminorm"] = r.theta_seminorm;
  j["verdicts"] = {{"iteration_bounds_hold", r.bounds_hold},
                   {"coefficients_cauchy", r.coefficients_cauchy},
                   {"exponent_match", r.exponent_match}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

nlohmann::json envelope_to_json(const EnvelopeReport& rep) {
  nlohmann::json j;
  j["trials"] = rep.trials;
  j["touches"] = rep.touches;
  j["violation_count"] = rep.violation_count;
  j["worst_margin"] = rep.worst_margin;
  j["tolerance"] = rep.tolerance;
  j["f_norm"] = rep.f_norm;
  nlohmann::json v = nlohmann::json::array();
  for (const auto& viol : rep.violations) {
    v.push_back({{"trial", viol.trial},
                 {"node", viol.node_id},
                 {"q", {viol.q[0], viol.q[1], viol.q[2]}},
                 {"Q", viol.Q.m},
                 {"margin", viol.margin}});
  }
  j["violations"] = v;
  return j;
}

}  // namespace

int run_solve(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  GridSpec grid = cfg.make_grid();
  ProblemSpec spec = cfg.make_problem(grid);
  SolveResult res = solve(spec, cfg.solve);
  write_json_file(cfg.out_dir + "/solution.json", stamp(cfg, field_to_json(res.u)));
  write_text_file(cfg.out_dir + "/solution.csv", field_to_csv(res.u, cfg.config_hash()));
  write_json_file(cfg.out_dir + "/diagnostics.json", solve_diagnostics(cfg, res));
  if (res.status != SolveStatus::converged)
    std::fprintf(stderr, "solve: %s\n", res.message.c_str());
  return status_code(res);
}

std::vector<CertifyRecord> certify_points(const ExperimentConfig& cfg,
                                          const ScalarField* solved_field) {
  GridSpec grid = cfg.make_grid();
  DegeneracyLaw law = cfg.make_law(grid);
  EllipticOperator op = cfg.make_operator();
  const auto points = certify_point_list(cfg);
  const CertifySection& cs = cfg.certify;

  // Field provider per point. Grid-backed unless the radii are unresolvable.
  ScalarField base = ScalarField::zeros(grid);
  bool have_base = false;
  if (cs.field == CertifyFieldKind::solve) {
    if (solved_field == nullptr) throw std::runtime_error("certify: no solved field supplied");
    base = *solved_field;
    have_base = true;
  } else if (cs.field == CertifyFieldKind::exact) {
    Manufactured m = cfg.make_manufactured(grid);
    base = ScalarField::sample(grid, m.u);
    have_base = true;
  }

  // Normalization puts the field in the smallness regime; the fitted
  // exponent is scale-invariant but K* is reported on the normalized field.
  ScalarField rhs = cfg.make_rhs(grid);
  if (have_base) {
    Normalized nm = normalize(base, rhs, cs.eps0);
    base = nm.u_bar;
  }

  std::vector<CertifyRecord> records(points.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      const Vec x0 = points[i];
      CertifyRecord rec;
      rec.point = x0;

      ScalarField profile = ScalarField::zeros(grid);
      const ScalarField* fld = &base;
      if (cs.field == CertifyFieldKind::pointwise_profile) {
        const double a = predicted_pointwise(law, x0, op.alpha0, cs.eta, grid.d);
        profile = ScalarField::sample(grid, [&](const Vec& x) {
          return std::pow(norm(sub(x, x0, grid.d), grid.d), 1.0 + a);
        });
        fld = &profile;
      }
      FieldView view = FieldView::of(*fld);

      rec.predicted = predicted_pointwise(law, x0, op.alpha0, cs.eta, grid.d);
      rec.predicted_local = predicted_local(law.beta_M, op.alpha0, cs.eta);
      {
        const double uv = interpolate(*fld, x0);
        Vec grad{0, 0, 0};
        MultiIndex nearest{0, 0, 0};
        for (int k = 0; k < grid.d; ++k)
          nearest[k] = std::clamp(
              static_cast<int>(std::lround((x0[k] + 1.0) / grid.h)), 1, grid.n - 2);
        if (grid.is_interior(nearest)) grad = gradient_at(*fld, nearest);
        rec.predicted_active =
            predicted_pointwise_active(law, x0, uv, grad, op.alpha0, cs.eta, grid.d);
      }

      try {
        const double K = cs.K;
        IterateResult it = iterate(view, x0, cs.rho, law, op.alpha0, cs.eta,
                                   K > 0 ? K : 1e300, cs.kmax);
        rec.K_star = it.K_star;
        rec.coef_constant = it.coef_constant;
        rec.delta1 = it.delta1;
        rec.rho_admissible = it.rho_admissible;
        rec.bounds_hold = K > 0 ? it.all_sup_ok : true;
        rec.coefficients_cauchy =
            it.coef_constant <= 4.0 * std::max(it.K_star, 1e-12) + 1e-12;
        rec.grid_feasible = it.kmax_used >= cs.kmax;
        rec.rows = std::move(it.rows);
      } catch (const std::runtime_error& e) {
        rec.grid_feasible = false;
        rec.note = e.what();
      }

      ExponentFit fit = estimate_exponent(view, x0, cs.rho, cs.kmax);
      rec.fitted = fit.alpha_hat;
      rec.fit_degenerate = fit.degenerate;
      rec.r2 = fit.r2;
      if (fit.degenerate) {
        rec.note = rec.note.empty() ? "smooth/saturated" : rec.note + "; smooth/saturated";
        rec.exponent_match = true;  // nothing to contradict the prediction
      } else {
        rec.exponent_match = std::abs(fit.alpha_hat - rec.predicted) <= cs.match_tol;
      }

      rec.theta = 0.5 * (rec.predicted + op.alpha0);
      rec.theta_seminorm = holder_seminorm(*fld, rec.theta, x0, 0.25,
                                           Rng::mix(cfg.seed, 0xCE47, i));
      records[i] = rec;
    }
  };
  std::vector<std::thread> pool;
  const int nthreads = std::max(1, cfg.threads);
  for (int t = 0; t < nthreads - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return records;
}

int run_certify(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  GridSpec grid = cfg.make_grid();

  ScalarField solved = ScalarField::zeros(grid);
  const ScalarField* solved_ptr = nullptr;
  if (cfg.certify.field == CertifyFieldKind::solve) {
    ProblemSpec spec = cfg.make_problem(grid);
    SolveResult res = solve(spec, cfg.solve);
    write_json_file(cfg.out_dir + "/solution.json", stamp(cfg, field_to_json(res.u)));
    write_text_file(cfg.out_dir + "/solution.csv", field_to_csv(res.u, cfg.config_hash()));
    write_json_file(cfg.out_dir + "/diagnostics.json", solve_diagnostics(cfg, res));
    if (res.status != SolveStatus::converged) {
      std::fprintf(stderr, "certify: %s\n", res.message.c_str());
      return kExitNumerical;
    }
    solved = std::move(res.u);
    solved_ptr = &solved;
  }

  auto records = certify_points(cfg, solved_ptr);

  // Per-point reports, aggregate table, exponent map.
  std::ostringstream agg, map;
  agg << "# ftlab " << kArtifactVersion << " config_hash=" << cfg.config_hash() << "\n";
  agg << "x0,x1,predicted,predicted_active,predicted_local,fitted,K_star,"
         "bounds_hold,coefficients_cauchy,exponent_match\n";
  map << "# ftlab " << kArtifactVersion << " config_hash=" << cfg.config_hash() << "\n";
  map << "x0,x1,predicted,fitted\n";
  nlohmann::json all = nlohmann::json::array();
  for (size_t i = 0; i < records.size(); ++i) {
    const CertifyRecord& r = records[i];
    all.push_back(record_to_json(r));
    // Per-point iteration table.
    std::ostringstream tab;
    tab << "# ftlab " << kArtifactVersion << " config_hash=" << cfg.config_hash()
        << " point=" << format_double(r.point[0]) << "," << format_double(r.point[1])
        << "\n";
    tab << "k,radius,alpha_k,a,b0,b1,sup_err,bound_unit,da,db,ls_gap,pass\n";
    for (const auto& row : r.rows) {
      tab << row.k << "," << format_double(row.radius) << ","
          << format_double(row.alpha_k) << "," << format_double(row.ell.a) << ","
          << format_double(row.ell.b[0]) << "," << format_double(row.ell.b[1]) << ","
          << format_double(row.sup_err) << "," << format_double(row.bound_unit) << ","
          << format_double(row.da) << "," << format_double(row.db) << ","
          << format_double(row.ls_gap) << "," << row.sup_ok << "\n";
    }
    char name[48];
    std::snprintf(name, sizeof name, "/iteration_%03zu.csv", i);
    write_text_file(cfg.out_dir + name, tab.str());
    agg << format_double(r.point[0]) << "," << format_double(r.point[1]) << ","
        << format_double(r.predicted) << "," << format_double(r.predicted_active) << ","
        << format_double(r.predicted_local) << "," << format_double(r.fitted) << ","
        << format_double(r.K_star) << "," << r.bounds_hold << ","
        << r.coefficients_cauchy << "," << r.exponent_match << "\n";
    map << format_double(r.point[0]) << "," << format_double(r.point[1]) << ","
        << format_double(r.predicted) << "," << format_double(r.fitted) << "\n";
  }
  write_json_file(cfg.out_dir + "/certify.json",
                  stamp(cfg, nlohmann::json{{"points", all}}));
  write_text_file(cfg.out_dir + "/certify.csv", agg.str());
  write_text_file(cfg.out_dir + "/exponent_map.csv", map.str());
  return kExitOk;
}

int run_check(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  GridSpec grid = cfg.make_grid();
  ProblemSpec spec = cfg.make_problem(grid);

  ScalarField u = ScalarField::zeros(grid);
  if (cfg.certify.field == CertifyFieldKind::exact) {
    Manufactured m = cfg.make_manufactured(grid);
    u = ScalarField::sample(grid, m.u);
  } else {
    SolveResult res = solve(spec, cfg.solve);
    write_json_file(cfg.out_dir + "/diagnostics.json", solve_diagnostics(cfg, res));
    if (res.status != SolveStatus::converged) {
      std::fprintf(stderr, "check: %s\n", res.message.c_str());
      return kExitNumerical;
    }
    u = std::move(res.u);
  }

  CheckConfig ck;
  ck.trials = cfg.check.trials;
  ck.seed = cfg.seed;
  ck.window = cfg.check.window;
  ck.Q_max = cfg.check.Q_max;
  ck.tol_C = cfg.check.tol_C;
  ck.reg_eps = spec.resolved_reg_eps(grid.h);

  EnvelopeReport sub = check_subsolution_envelope(u, spec, ck);
  EnvelopeReport sup = check_supersolution_envelope(u, spec, ck);
  write_json_file(cfg.out_dir + "/check_sub.json", stamp(cfg, envelope_to_json(sub)));
  write_json_file(cfg.out_dir + "/check_super.json", stamp(cfg, envelope_to_json(sup)));
  if (spec.rhs.sup_interior() == 0.0) {
    DivisionReport div = check_homogeneous_division(u, spec.op, ck);
    nlohmann::json j{{"pass", div.pass},
                     {"above_max_F", div.above_max_F},
                     {"below_min_F", div.below_min_F},
                     {"above_touches", div.above_touches},
                     {"below_touches", div.below_touches},
                     {"tolerance", div.tolerance}};
    write_json_file(cfg.out_dir + "/check_division.json", stamp(cfg, j));
  }
  return kExitOk;
}

int run_modulus(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  GridSpec grid = cfg.make_grid();
  DegeneracyLaw law = cfg.make_law(grid);
  std::vector<double> eps_list = cfg.modulus_eps_list;
  if (law.modulus.kind == ModulusKind::sqrt_kind) {
    for (double ref : {1e-2, 1e-3}) {
      bool present = false;
      for (double e : eps_list) present = present || std::abs(e - ref) < 1e-15;
      if (!present) eps_list.push_back(ref);
    }
  }
  std::ostringstream csv;
  csv << "# ftlab " << kArtifactVersion << " config_hash=" << cfg.config_hash() << "\n";
  csv << "eps,rho_max,admissible\n";
  std::printf("%-12s %-14s %s\n", "eps", "rho_max", "admissible");
  for (double eps : eps_list) {
    ThresholdResult r = max_admissible_ratio(law.modulus, eps);
    std::printf("%-12g %-14g %s\n", eps, r.admissible ? r.rho : 0.0,
                r.admissible ? "yes" : "no admissible rho above floor");
    csv << format_double(eps) << "," << format_double(r.admissible ? r.rho : 0.0) << ","
        << (r.admissible ? 1 : 0) << "\n";
  }
  write_text_file(cfg.out_dir + "/modulus.csv", csv.str());
  return kExitOk;
}

int run_approx(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  GridSpec grid = cfg.make_grid();
  if (cfg.boundary_kind == BoundaryKind::manufactured)
    throw ConfigError("approx requires a shared polynomial or table boundary");
  ProblemSpec base = cfg.make_problem(grid);

  SolveResult hres = solve_homogeneous(base.op, base.boundary, grid, cfg.solve);
  if (hres.status != SolveStatus::converged) {
    std::fprintf(stderr, "approx: homogeneous solve failed: %s\n", hres.message.c_str());
    return kExitNumerical;
  }

  std::ostringstream csv;
  csv << "# ftlab " << kArtifactVersion << " config_hash=" << cfg.config_hash() << "\n";
  csv << "eps,distance\n";
  for (double eps : cfg.approx_eps_schedule) {
    ProblemSpec spec = base;
    spec.rhs = ScalarField::constant(grid, -eps);
    SolveResult res = solve(spec, cfg.solve);
    if (res.status != SolveStatus::converged) {
      std::fprintf(stderr, "approx: solve at eps=%g failed: %s\n", eps, res.message.c_str());
      return kExitNumerical;
    }
    double dist = 0.0;
    grid.for_each_interior([&](const MultiIndex& mi, long id) {
      if (norm(grid.point(mi), grid.d) <= 0.5)
        dist = std::max(dist, std::abs(res.u.v[id] - hres.u.v[id]));
    });
    std::printf("eps = %-10g  |u_eps - h| on B_1/2 = %g\n", eps, dist);
    csv << format_double(eps) << "," << format_double(dist) << "\n";
  }
  write_text_file(cfg.out_dir + "/approx.csv", csv.str());
  return kExitOk;
}

int run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_command.empty()) throw ConfigError("sweep.command missing");
  if (!cfg.sweep_vary.is_object() || cfg.sweep_vary.empty())
    throw ConfigError("sweep.vary must be a non-empty object of key-path: [values]");

  std::vector<std::string> keys;
  std::vector<std::vector<nlohmann::json>> values;
  for (auto it = cfg.sweep_vary.begin(); it != cfg.sweep_vary.end(); ++it) {
    keys.push_back(it.key());
    values.emplace_back(it.value().begin(), it.value().end());
    if (values.back().empty()) throw ConfigError("sweep.vary." + it.key() + " is empty");
  }

  auto patch = [](nlohmann::json& j, const std::string& path, const nlohmann::json& v) {
    nlohmann::json* cur = &j;
    size_t start = 0;
    for (;;) {
      size_t dotpos = path.find('.', start);
      std::string part = path.substr(start, dotpos - start);
      if (dotpos == std::string::npos) {
        (*cur)[part] = v;
        return;
      }
      cur = &((*cur)[part]);
      start = dotpos + 1;
    }
  };

  std::vector<size_t> idx(keys.size(), 0);
  int combo = 0;
  std::ostringstream indexcsv;
  indexcsv << "# ftlab " << kArtifactVersion << " config_hash=" << cfg.config_hash()
           << "\n";
  indexcsv << "combo,dir";
  for (const auto& k : keys) indexcsv << "," << k;
  indexcsv << "\n";
  for (;;) {
    nlohmann::json j = cfg.raw;
    j.erase("sweep");
    for (size_t i = 0; i < keys.size(); ++i) patch(j, keys[i], values[i][idx[i]]);
    char sub[32];
    std::snprintf(sub, sizeof sub, "sweep_%03d", combo);
    j["out"] = cfg.out_dir + "/" + sub;
    ExperimentConfig c = ExperimentConfig::parse(j);
    int rc;
    if (cfg.sweep_command == "solve") rc = run_solve(c);
    else if (cfg.sweep_command == "certify") rc = run_certify(c);
    else if (cfg.sweep_command == "check") rc = run_check(c);
    else if (cfg.sweep_command == "modulus") rc = run_modulus(c);
    else if (cfg.sweep_command == "approx") rc = run_approx(c);
    else throw ConfigError("sweep.command unknown: " + cfg.sweep_command);
    if (rc != kExitOk) return rc;
    indexcsv << combo << "," << sub;
    for (size_t i = 0; i < keys.size(); ++i) indexcsv << "," << values[i][idx[i]].dump();
    indexcsv << "\n";
    ++combo;
    size_t k = 0;
    while (k < idx.size() && ++idx[k] == values[k].size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  ensure_dir(cfg.out_dir);
  write_text_file(cfg.out_dir + "/sweep_index.csv", indexcsv.str());
  return kExitOk;
}

}  // namespace ftlab
