#pragma once

#include <cstdint>
#include <string>

#include "ftlab/geom.hpp"

namespace ftlab {

enum class OperatorKind { negative_trace, pucci_minus, pucci_plus, bellman_pair };

const char* operator_kind_name(OperatorKind k);
OperatorKind operator_kind_from_name(const std::string& name);

/// Uniformly (lambda, Lambda)-elliptic operator on symmetric matrices, in
/// the decreasing convention: adding a positive semidefinite matrix does not
/// increase the value, F(M + N) <= F(M) for N >= 0, and F(0) = 0. The
/// Laplacian model under this convention is F(M) = -tr(M).
///
/// alpha0 is the interior gradient-Holder exponent of the homogeneous
/// equation F(D^2 u) = 0, a per-operator configuration input.
struct EllipticOperator {
  OperatorKind kind = OperatorKind::negative_trace;
  double lambda = 1.0;
  double Lambda = 1.0;
  double alpha0 = 1.0;

  static EllipticOperator make(OperatorKind kind, double lambda, double Lambda,
                               double alpha0 = -1.0, int d = 2);

  double eval(const SymMat& M) const;

  /// Dense entry with symmetry validation; rejects non-symmetric input.
  double eval_dense(const double M[3][3], int d, double sym_tol = 1e-12) const;

  void validate(int d) const;
};

/// Numerical check of the ellipticity inequality on random (M, N) pairs with
/// N >= 0. Ratios are recorded in both the spectral norm (largest eigenvalue
/// of N) and the trace norm; the pass verdict uses
///   lambda * |N|_spec <= F(M) - F(M+N) <= d * Lambda * |N|_spec.
struct EllipticityReport {
  bool pass = true;
  long trials = 0;
  long degenerate = 0;  // trials with |N| ~ 0, both sides 0
  double min_ratio_spec = 1e300;
  double max_ratio_spec = -1e300;
  double min_ratio_trace = 1e300;
  double max_ratio_trace = -1e300;
  std::string violation;  // first violating (M, N) pair, printed
};

EllipticityReport check_ellipticity(const EllipticOperator& op, int d, long trials,
                                    uint64_t seed);

}  // namespace ftlab
