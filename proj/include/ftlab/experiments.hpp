#pragma once

#include <string>

#include "ftlab/config.hpp"
#include "ftlab/regularity.hpp"

namespace ftlab {

// Exit codes shared by the drivers and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitConfig = 3;

int run_solve(const ExperimentConfig& cfg);
int run_certify(const ExperimentConfig& cfg);
int run_check(const ExperimentConfig& cfg);
int run_modulus(const ExperimentConfig& cfg);
int run_approx(const ExperimentConfig& cfg);
int run_sweep(const ExperimentConfig& cfg);

/// Per-point certification record, exposed for tests and the acceptance
/// suite; run_certify writes these to disk.
struct CertifyRecord {
  Vec point{0, 0, 0};
  double predicted = 0.0;
  double predicted_active = 0.0;
  double predicted_local = 0.0;
  double fitted = 0.0;
  bool fit_degenerate = false;
  double r2 = 0.0;
  double K_star = 0.0;
  double coef_constant = 0.0;
  double delta1 = 0.0;
  bool rho_admissible = true;
  bool grid_feasible = true;
  double theta = 0.0;
  double theta_seminorm = 0.0;
  bool bounds_hold = true;
  bool coefficients_cauchy = true;
  bool exponent_match = true;
  std::string note;  // e.g. "smooth/saturated"
  std::vector<IterationRow> rows;
};

std::vector<CertifyRecord> certify_points(const ExperimentConfig& cfg,
                                          const ScalarField* solved_field);

}  // namespace ftlab
