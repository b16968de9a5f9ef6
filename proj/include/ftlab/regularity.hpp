#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ftlab/degeneracy.hpp"
#include "ftlab/elliptic.hpp"
#include "ftlab/grid.hpp"

namespace ftlab {

/// A field the certification engine can sample: either grid data (ball
/// samples are the grid nodes, off-node values by multilinear interpolation)
/// or a closed form ("formula mode", used when the radii of interest fall
/// under the grid resolution).
struct FieldView {
  const ScalarField* field = nullptr;
  std::function<double(const Vec&)> fn;
  int d = 2;

  static FieldView of(const ScalarField& f) { return {&f, {}, f.grid.d}; }
  static FieldView formula(std::function<double(const Vec&)> fn, int d) {
    return {nullptr, std::move(fn), d};
  }

  bool grid_backed() const { return field != nullptr; }
  double value(const Vec& x) const { return field ? interpolate(*field, x) : fn(x); }

  /// Sample set of the closed ball B_r(x0): grid nodes inside the ball for
  /// grid-backed views, a fixed 17^d lattice otherwise.
  std::vector<std::pair<Vec, double>> ball_samples(const Vec& x0, double r) const;
};

struct AffineFit {
  AffineMap ell;
  double sup_err = 0.0;
  int support = 0;      // number of samples fitted
  double ls_gap = 0.0;  // sup error of the least-squares fit minus sup_err
};

/// Sup-norm (Chebyshev) affine fit over the ball samples; requires at least
/// 3^d samples. Throws std::runtime_error("too few nodes...") otherwise.
AffineFit best_affine(const FieldView& u, const Vec& x0, double r);
AffineFit best_affine_on(const std::vector<std::pair<Vec, double>>& samples, int d);

/// Nondecreasing exponents alpha_k = min_i { alpha0 - eta,
/// min_{B_{rho^k}(x0)} 1/(1 + beta_i) }, k = 0..kmax. Ball maxima of beta_i
/// are sampled on grid nodes when a grid is given and on a fixed lattice
/// otherwise; nested-ball monotonicity is enforced on the sampled maxima.
std::vector<double> alpha_sequence(const DegeneracyLaw& law, const Vec& x0, double rho,
                                   double alpha0, double eta, int kmax,
                                   const GridSpec* grid = nullptr);

/// Pointwise predicted exponent min_i { alpha0 - eta, 1/(1 + beta_i(x0)) },
/// minimum over every phase of the law.
double predicted_pointwise(const DegeneracyLaw& law, const Vec& x0, double alpha0,
                           double eta, int d);

/// Variant counting only the phase active at (u(x0), Du(x0)).
double predicted_pointwise_active(const DegeneracyLaw& law, const Vec& x0, double u_val,
                                  const Vec& grad, double alpha0, double eta, int d);

/// Local predicted exponent min { alpha0 - eta, 1/(1 + beta_M) }.
double predicted_local(double beta_M, double alpha0, double eta);

struct IterationRow {
  int k = 0;
  double radius = 0.0;
  double alpha_k = 0.0;
  AffineMap ell;
  double sup_err = 0.0;
  double bound_unit = 0.0;     // rho^{k (1 + alpha_k)}; the bound is K * bound_unit
  double da = 0.0;             // |a_k - a_{k-1}|
  double db = 0.0;             // |b_k - b_{k-1}|
  double da_bound_unit = 0.0;  // rho^{(k-1)(1 + alpha_{k-1})}
  double db_bound_unit = 0.0;  // rho^{(k-1) alpha_{k-1}}
  double ls_gap = 0.0;         // least-squares cross-check: sup gap vs the LP fit
  bool sup_ok = true;          // sup_err <= K * bound_unit for the K supplied
};

struct IterateResult {
  std::vector<IterationRow> rows;
  double K = 0.0;              // the constant the rows were judged against
  double K_star = 0.0;         // minimal constant for every sup row, incl. k=0 (|u| on B_1)
  double coef_constant = 0.0;  // minimal constant for the increment bounds
  int kmax_used = 0;
  bool all_sup_ok = true;
  double delta1 = 0.0;         // admissible ratio for the law's modulus
  bool rho_admissible = true;  // rho <= delta1 (vacuous for zero modulus)
  std::vector<double> alphas;  // alpha_0..alpha_kmax
};

/// Geometric iteration record at x0: Chebyshev fits on shrinking balls
/// B_{rho^k}(x0) against the bounds K rho^{k(1+alpha_k)} and the coefficient
/// increment bounds. Throws std::runtime_error("RadiusUnderResolved...")
/// when fewer than 3 rows are resolvable on a grid-backed view.
IterateResult iterate(const FieldView& u, const Vec& x0, double rho,
                      const DegeneracyLaw& law, double alpha0, double eta, double K,
                      int kmax);

struct ExponentFit {
  double alpha_hat = 0.0;  // capped at 1
  double alpha_raw = 0.0;
  double r2 = 0.0;
  Vec b_limit{0, 0, 0};
  int used_rows = 0;
  bool degenerate = false;  // fewer than 3 usable rows
};

/// Least-squares slope of ln sup_err_k against k ln rho; alpha_hat = slope-1.
ExponentFit estimate_exponent(const FieldView& u, const Vec& x0, double rho, int kmax);

struct Normalized {
  ScalarField u_bar;
  ScalarField f_bar;
  double K = 1.0;
};

/// Smallness-regime scaling: K = min(1, (|u| + |f|/eps0)^-1), u_bar = K u,
/// f_bar = K f; guarantees |u_bar| <= 1 and |f_bar| <= eps0.
Normalized normalize(const ScalarField& u, const ScalarField& f, double eps0);

struct Rescaled {
  ScalarField v;  // on a fresh unit-square grid with ball mask
  EllipticOperator op;
  double sup_norm = 0.0;
};

/// v_k(y) = (u - ell_k)(x0 + rho^k y) / rho^{k(1+alpha_k)} resampled on a
/// fresh grid. The conjugated operator rho^{k(1-alpha_k)} F(rho^{k(alpha_k-1)} .)
/// coincides with F for every implemented kind (positive 1-homogeneity), so
/// the same operator is returned. Requires >= 9^d source nodes in the ball.
Rescaled rescale(const ScalarField& u, const Vec& x0, const AffineMap& ell, double rho,
                 int k, double alpha_k, const EllipticOperator& op, int n_out = 65);

/// max |u(x)-u(y)| / |x-y|^theta over node pairs of the ball region
/// (all pairs when few nodes, seeded subsampling above that; pairs against
/// the center node are always included).
double holder_seminorm(const ScalarField& u, double theta, const Vec& center,
                       double radius, uint64_t seed);

}  // namespace ftlab
