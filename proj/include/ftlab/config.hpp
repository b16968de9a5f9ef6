#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftlab/degeneracy.hpp"
#include "ftlab/elliptic.hpp"
#include "ftlab/solver.hpp"

namespace ftlab {

/// Config validation failure; the message names the offending key. Mapped to
/// exit code 3 by the CLI.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

enum class RhsKind { constant, manufactured, table };
enum class BoundaryKind { manufactured, polynomial, table };
enum class CertifyFieldKind { solve, exact, pointwise_profile };

struct CertifySection {
  std::vector<Vec> points;     // explicit points, if given
  int lattice_n = 5;           // else lattice_n^d lattice over the radius box
  double lattice_radius = 0.5;
  double rho = 0.5;
  double eta = 0.01;
  int kmax = 5;
  double eps0 = 1.0;
  double K = -1.0;             // < 0: judge rows against the measured K*
  CertifyFieldKind field = CertifyFieldKind::solve;
  double match_tol = 0.07;     // |alpha_hat - predicted| verdict tolerance
};

struct CheckSection {
  long trials = 10000;
  int window = 5;
  double Q_max = 10.0;
  double tol_C = 4.0;
};

/// Flat JSON configuration mirroring the module schemas.
struct ExperimentConfig {
  // grid
  int d = 2;
  int n = 65;
  int margin = 1;
  // operator
  OperatorKind op_kind = OperatorKind::negative_trace;
  double lambda = 1.0;
  double Lambda = 1.0;
  double alpha0 = -1.0;  // kind default when < 0
  // law (raw JSON kept for building after the grid is known)
  nlohmann::json law_json;
  // rhs / boundary
  RhsKind rhs_kind = RhsKind::manufactured;
  double rhs_value = 0.0;
  nlohmann::json rhs_table;
  BoundaryKind boundary_kind = BoundaryKind::manufactured;
  double poly_c0 = 0.0;
  Vec poly_lin{0, 0, 0};
  SymMat poly_quad = SymMat::zero(3);
  nlohmann::json boundary_table;
  // shift p
  Vec shift{0, 0, 0};
  // solve
  SolveConfig solve;
  double reg_eps = -1.0;
  // subcommand sections
  CertifySection certify;
  CheckSection check;
  std::vector<double> modulus_eps_list{1e-2, 1e-3};
  std::vector<double> approx_eps_schedule{1e-1, 1e-2, 1e-3, 1e-4};
  // sweep
  std::string sweep_command;
  nlohmann::json sweep_vary;
  // misc
  uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = "out";

  nlohmann::json raw;  // canonical source, hashed into every artifact

  static ExperimentConfig parse(const nlohmann::json& j);
  std::string config_hash() const;

  GridSpec make_grid() const;
  EllipticOperator make_operator() const;
  DegeneracyLaw make_law(const GridSpec& grid) const;
  /// The manufactured profile when the law is a constant-exponent law and the
  /// operator supports it; throws ConfigError otherwise.
  Manufactured make_manufactured(const GridSpec& grid) const;
  ScalarField make_rhs(const GridSpec& grid) const;
  std::function<double(const Vec&)> make_boundary(const GridSpec& grid) const;
  ProblemSpec make_problem(const GridSpec& grid) const;
};

DegeneracyLaw law_from_json(const nlohmann::json& j, double equality_tol, int d);

}  // namespace ftlab
