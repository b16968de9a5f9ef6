#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "ftlab/experiments.hpp"
#include "ftlab/field_io.hpp"

using namespace ftlab;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_config(const std::string& out) {
  return nlohmann::json{
      {"grid", {{"d", 2}, {"n", 33}}},
      {"operator",
       {{"kind", "negative_trace"}, {"lambda", 1.0}, {"Lambda", 1.0}, {"alpha0", 1.0}}},
      {"law", {{"beta", 1.0}}},
      {"rhs", {{"kind", "manufactured"}}},
      {"boundary", {{"kind", "manufactured"}}},
      {"solve", {{"tol", 1e-5}, {"over_relax", 1.7}}},
      {"seed", 3},
      {"out", out}};
}

struct TmpDir {
  fs::path path;
  explicit TmpDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config validation names the offending key") {
  auto j = base_config("x");
  j["grid"]["n"] = 4;
  CHECK_THROWS_WITH_AS((void)ExperimentConfig::parse(j), "grid.n must be odd >= 5",
                       ConfigError);
  j = base_config("x");
  j["operator"]["lambda"] = 0.0;
  CHECK_THROWS_WITH_AS((void)ExperimentConfig::parse(j), "operator.lambda must be > 0",
                       ConfigError);
  j = base_config("x");
  j["solve"]["over_relax"] = 2.5;
  CHECK_THROWS_AS((void)ExperimentConfig::parse(j), ConfigError);
  j = base_config("x");
  j["certify"] = {{"rho", 1.5}};
  CHECK_THROWS_WITH_AS((void)ExperimentConfig::parse(j), "certify.rho must lie in (0, 1)",
                       ConfigError);
}

TEST_CASE("constant-law shorthand expands to a complement-only law") {
  auto cfg = ExperimentConfig::parse(base_config("x"));
  GridSpec g = cfg.make_grid();
  DegeneracyLaw law = cfg.make_law(g);
  CHECK(law.phases.empty());
  CHECK(law.complement_beta.value == 1.0);
  CHECK(law.beta_M == 1.0);
  CHECK(law.equality_tol == doctest::Approx(g.h * g.h));
}

TEST_CASE("manufactured rhs requires a constant law") {
  auto j = base_config("x");
  j["law"] = {{"beta_m", 0.0},
              {"beta_M", 1.0},
              {"phases",
               {{{"phase", {{"kind", "positive_set"}}},
                 {"beta", {{"kind", "constant"}, {"value", 1.0}}}}}}};
  auto cfg = ExperimentConfig::parse(j);
  CHECK_THROWS_AS((void)cfg.make_rhs(cfg.make_grid()), ConfigError);
}

TEST_CASE("run_solve writes artifacts and returns 0 on convergence") {
  TmpDir tmp("ftlab_cli_solve");
  auto cfg = ExperimentConfig::parse(base_config(tmp.path.string()));
  CHECK(run_solve(cfg) == kExitOk);
  CHECK(fs::exists(tmp.path / "solution.json"));
  CHECK(fs::exists(tmp.path / "solution.csv"));
  CHECK(fs::exists(tmp.path / "diagnostics.json"));
  auto diag = nlohmann::json::parse(read_text_file((tmp.path / "diagnostics.json").string()));
  CHECK(diag["status"] == "converged");
  CHECK(diag["config_hash"] == cfg.config_hash());
  CHECK(diag["version"] == kArtifactVersion);
  CHECK(diag["final_residual"].get<double>() <= 1e-5);
}

TEST_CASE("run_solve surfaces StepUnstable as a numerical failure") {
  TmpDir tmp("ftlab_cli_unstable");
  auto j = base_config(tmp.path.string());
  j["solve"]["step_abs"] = 10.0 * (2.0 / 32.0) * (2.0 / 32.0);
  j["solve"]["cascade"] = false;
  auto cfg = ExperimentConfig::parse(j);
  CHECK(run_solve(cfg) == kExitNumerical);
  auto diag = nlohmann::json::parse(read_text_file((tmp.path / "diagnostics.json").string()));
  CHECK(diag["status"] == "step_unstable");
}

TEST_CASE("same config and seed give byte-identical CSV artifacts") {
  TmpDir a("ftlab_cli_det_a"), b("ftlab_cli_det_b");
  auto ja = base_config(a.path.string());
  auto jb = base_config(b.path.string());
  auto ca = ExperimentConfig::parse(ja);
  auto cb = ExperimentConfig::parse(jb);
  REQUIRE(run_solve(ca) == kExitOk);
  REQUIRE(run_solve(cb) == kExitOk);
  auto csv_a = read_text_file((a.path / "solution.csv").string());
  auto csv_b = read_text_file((b.path / "solution.csv").string());
  // The hash covers the whole config including the output directory, so
  // strip the stamp line before comparing the payload bytes.
  csv_a = csv_a.substr(csv_a.find('\n'));
  csv_b = csv_b.substr(csv_b.find('\n'));
  CHECK(csv_a == csv_b);
}

TEST_CASE("run_modulus emits the reference rows for the sqrt modulus") {
  TmpDir tmp("ftlab_cli_modulus");
  auto j = base_config(tmp.path.string());
  j["law"]["modulus"] = {{"kind", "sqrt"}};
  auto cfg = ExperimentConfig::parse(j);
  CHECK(run_modulus(cfg) == kExitOk);
  auto csv = read_text_file((tmp.path / "modulus.csv").string());
  CHECK(csv.find("eps,rho_max,admissible") != std::string::npos);
  // Reference thresholds land within 5% of 4.7e-7 and 2.55e-9.
  bool row1 = false, row2 = false;
  std::istringstream lines(csv);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
    const double eps = std::stod(line.substr(0, line.find(',')));
    const double rho = std::stod(line.substr(line.find(',') + 1));
    if (std::abs(eps - 1e-2) < 1e-12) row1 = std::abs(rho - 4.7e-7) / 4.7e-7 < 0.05;
    if (std::abs(eps - 1e-3) < 1e-12) row2 = std::abs(rho - 2.55e-9) / 2.55e-9 < 0.05;
  }
  CHECK(row1);
  CHECK(row2);
}

TEST_CASE("run_certify on the exact field emits reports and the exponent map") {
  TmpDir tmp("ftlab_cli_certify");
  auto j = base_config(tmp.path.string());
  j["grid"]["n"] = 65;
  j["certify"] = {{"points", {{0.0, 0.0}}}, {"kmax", 4}, {"field", "exact"}};
  auto cfg = ExperimentConfig::parse(j);
  CHECK(run_certify(cfg) == kExitOk);
  CHECK(fs::exists(tmp.path / "certify.json"));
  CHECK(fs::exists(tmp.path / "certify.csv"));
  CHECK(fs::exists(tmp.path / "exponent_map.csv"));
  auto rep = nlohmann::json::parse(read_text_file((tmp.path / "certify.json").string()));
  REQUIRE(rep["points"].size() == 1);
  const auto& p = rep["points"][0];
  CHECK(p["predicted_alpha"].get<double>() == doctest::Approx(0.5));
  CHECK(p["fitted_alpha"].get<double>() == doctest::Approx(0.5).epsilon(0.05));
  CHECK(p["verdicts"]["exponent_match"].get<bool>());
}

TEST_CASE("certify on an affine field records the degenerate fit") {
  TmpDir tmp("ftlab_cli_certify_affine");
  auto j = base_config(tmp.path.string());
  j["grid"]["n"] = 65;
  j["law"] = {{"beta", 0.0}};
  j["rhs"] = {{"kind", "constant"}, {"value", 0.0}};
  j["boundary"] = {{"kind", "polynomial"}, {"const", 0.2}, {"linear", {1.0, -0.5}}};
  j["certify"] = {{"points", {{0.0, 0.0}}}, {"kmax", 4}, {"field", "solve"}};
  auto cfg = ExperimentConfig::parse(j);
  CHECK(run_certify(cfg) == kExitOk);
  auto rep = nlohmann::json::parse(read_text_file((tmp.path / "certify.json").string()));
  const auto& p = rep["points"][0];
  CHECK(p["fit_degenerate"].get<bool>());
  CHECK(p["note"].get<std::string>().find("smooth/saturated") != std::string::npos);
}

TEST_CASE("run_check writes envelope reports; division appears only for f = 0") {
  TmpDir tmp("ftlab_cli_check");
  auto j = base_config(tmp.path.string());
  j["check"] = {{"trials", 500}};
  auto cfg = ExperimentConfig::parse(j);
  CHECK(run_check(cfg) == kExitOk);
  CHECK(fs::exists(tmp.path / "check_sub.json"));
  CHECK(fs::exists(tmp.path / "check_super.json"));
  CHECK(!fs::exists(tmp.path / "check_division.json"));  // manufactured f != 0
  auto sub = nlohmann::json::parse(read_text_file((tmp.path / "check_sub.json").string()));
  CHECK(sub["violation_count"].get<long>() == 0);
}

TEST_CASE("run_approx produces decreasing distances for the saddle boundary") {
  TmpDir tmp("ftlab_cli_approx");
  auto j = base_config(tmp.path.string());
  j["grid"]["n"] = 33;
  j["rhs"] = {{"kind", "constant"}, {"value", 0.0}};
  j["boundary"] = {{"kind", "polynomial"}, {"quad", {{2.0, 0.0}, {0.0, -2.0}}}};
  j["solve"] = {{"tol", 3e-5}, {"over_relax", 1.7}};
  j["approx"] = {{"eps_schedule", {1e-1, 1e-2, 1e-3}}};
  auto cfg = ExperimentConfig::parse(j);
  CHECK(run_approx(cfg) == kExitOk);
  auto csv = read_text_file((tmp.path / "approx.csv").string());
  std::istringstream lines(csv);
  std::string line;
  std::vector<double> dist;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
    dist.push_back(std::stod(line.substr(line.find(',') + 1)));
  }
  REQUIRE(dist.size() == 3);
  CHECK(dist[0] > dist[1]);
  CHECK(dist[1] > dist[2]);
}

TEST_CASE("approx at eps = 0: degenerate and homogeneous solves coincide") {
  TmpDir tmp("ftlab_cli_approx0");
  auto j = base_config(tmp.path.string());
  j["grid"]["n"] = 33;
  j["rhs"] = {{"kind", "constant"}, {"value", 0.0}};
  j["boundary"] = {{"kind", "polynomial"}, {"quad", {{2.0, 0.0}, {0.0, -2.0}}}};
  j["solve"] = {{"tol", 1e-5}, {"over_relax", 1.7}};
  j["approx"] = {{"eps_schedule", {0.0}}};
  auto cfg = ExperimentConfig::parse(j);
  CHECK(run_approx(cfg) == kExitOk);
  auto csv = read_text_file((tmp.path / "approx.csv").string());
  const auto pos = csv.rfind(',');
  const double dist = std::stod(csv.substr(pos + 1));
  // Identical fixed points and identical relaxation paths at f = 0.
  CHECK(dist <= 1e-5);
}

TEST_CASE("certification records are identical across worker-pool widths") {
  auto j = base_config("unused_out");
  j["grid"]["n"] = 65;
  j["certify"] = {{"lattice_n", 3}, {"lattice_radius", 0.4}, {"kmax", 4},
                  {"field", "exact"}};
  auto c1 = ExperimentConfig::parse(j);
  j["threads"] = 3;
  auto c3 = ExperimentConfig::parse(j);
  auto r1 = certify_points(c1, nullptr);
  auto r3 = certify_points(c3, nullptr);
  REQUIRE(r1.size() == r3.size());
  for (size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].fitted == r3[i].fitted);
    CHECK(r1[i].K_star == r3[i].K_star);
    CHECK(r1[i].theta_seminorm == r3[i].theta_seminorm);
  }
}

TEST_CASE("run_sweep expands the cartesian product into subdirectories") {
  TmpDir tmp("ftlab_cli_sweep");
  auto j = base_config(tmp.path.string());
  j["grid"]["n"] = 17;
  j["sweep"] = {{"command", "solve"},
                {"vary", {{"grid.n", {17, 33}}, {"law.beta", {0.0, 1.0}}}}};
  auto cfg = ExperimentConfig::parse(j);
  CHECK(run_sweep(cfg) == kExitOk);
  int count = 0;
  for (auto& e : fs::directory_iterator(tmp.path))
    if (e.is_directory()) ++count;
  CHECK(count == 4);
  CHECK(fs::exists(tmp.path / "sweep_index.csv"));
}
