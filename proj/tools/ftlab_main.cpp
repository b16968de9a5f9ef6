// ftlab: numerical laboratory for gradient-degenerate fully nonlinear
// equations on the unit ball, with pointwise gradient-Holder certification.
//
// Subcommands: solve, certify, check, modulus, approx, sweep.
// Exit codes: 0 ok, 2 numerical failure, 3 configuration error.

#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ftlab/experiments.hpp"
#include "ftlab/field_io.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  long seed = -1;
  int threads = 0;
  std::string points;  // "x,y;x,y;..."
};

void add_common(CLI::App* app, CommonOpts& o) {
  app->add_option("--config", o.config_path, "configuration JSON path")->required();
  app->add_option("--out", o.out_dir, "output directory override");
  app->add_option("--seed", o.seed, "seed override");
  app->add_option("--threads", o.threads, "worker threads for certification points");
  app->add_option("--points", o.points, "certify points override, \"x,y;x,y;...\"");
}

nlohmann::json load_config(const CommonOpts& o) {
  nlohmann::json j = nlohmann::json::parse(ftlab::read_text_file(o.config_path));
  if (!o.out_dir.empty()) j["out"] = o.out_dir;
  if (o.seed >= 0) j["seed"] = o.seed;
  if (o.threads > 0) j["threads"] = o.threads;
  if (!o.points.empty()) {
    nlohmann::json pts = nlohmann::json::array();
    std::string s = o.points;
    size_t start = 0;
    while (start < s.size()) {
      size_t semi = s.find(';', start);
      std::string tok = s.substr(start, semi == std::string::npos ? semi : semi - start);
      nlohmann::json p = nlohmann::json::array();
      size_t c0 = 0;
      while (c0 < tok.size()) {
        size_t comma = tok.find(',', c0);
        p.push_back(std::stod(tok.substr(c0, comma == std::string::npos ? comma : comma - c0)));
        if (comma == std::string::npos) break;
        c0 = comma + 1;
      }
      pts.push_back(p);
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    j["certify"]["points"] = pts;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"degenerate free transmission lab"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto* c_solve = app.add_subcommand("solve", "solve the configured problem");
  auto* c_certify = app.add_subcommand("certify", "pointwise exponent certification");
  auto* c_check = app.add_subcommand("check", "viscosity envelope checks");
  auto* c_modulus = app.add_subcommand("modulus", "admissible-ratio table for the modulus");
  auto* c_approx = app.add_subcommand("approx", "distance to the homogeneous solution as |f| -> 0");
  auto* c_sweep = app.add_subcommand("sweep", "cartesian product over config lists");
  for (auto* c : {c_solve, c_certify, c_check, c_modulus, c_approx, c_sweep})
    add_common(c, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json j = load_config(opts);
    ftlab::ExperimentConfig cfg = ftlab::ExperimentConfig::parse(j);
    if (c_solve->parsed()) return ftlab::run_solve(cfg);
    if (c_certify->parsed()) return ftlab::run_certify(cfg);
    if (c_check->parsed()) return ftlab::run_check(cfg);
    if (c_modulus->parsed()) return ftlab::run_modulus(cfg);
    if (c_approx->parsed()) return ftlab::run_approx(cfg);
    if (c_sweep->parsed()) return ftlab::run_sweep(cfg);
  } catch (const ftlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return ftlab::kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return ftlab::kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return ftlab::kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ftlab::kExitNumerical;
  }
  return ftlab::kExitOk;
}
