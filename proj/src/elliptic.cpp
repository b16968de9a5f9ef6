#include "ftlab/elliptic.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ftlab/rng.hpp"

namespace ftlab {

const char* operator_kind_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::negative_trace: return "negative_trace";
    case OperatorKind::pucci_minus: return "pucci_minus";
    case OperatorKind::pucci_plus: return "pucci_plus";
    case OperatorKind::bellman_pair: return "bellman_pair";
  }
  return "?";
}

OperatorKind operator_kind_from_name(const std::string& name) {
  if (name == "negative_trace") return OperatorKind::negative_trace;
  if (name == "pucci_minus") return OperatorKind::pucci_minus;
  if (name == "pucci_plus") return OperatorKind::pucci_plus;
  if (name == "bellman_pair") return OperatorKind::bellman_pair;
  throw std::invalid_argument("operator.kind unknown: " + name);
}

EllipticOperator EllipticOperator::make(OperatorKind kind, double lambda, double Lambda,
                                        double alpha0, int d) {
  EllipticOperator op;
  op.kind = kind;
  op.lambda = lambda;
  op.Lambda = Lambda;
  if (alpha0 > 0.0) {
    op.alpha0 = alpha0;
  } else {
    // Defaults: 1.0 for the linear and Bellman kinds, 1.0 for Pucci in
    // d = 2; Pucci in d = 3 has no default and must be configured.
    bool pucci = kind == OperatorKind::pucci_minus || kind == OperatorKind::pucci_plus;
    if (pucci && d == 3)
      throw std::invalid_argument("operator.alpha0 required for Pucci kinds in d=3");
    op.alpha0 = 1.0;
  }
  op.validate(d);
  return op;
}

void EllipticOperator::validate(int d) const {
  if (!(lambda > 0.0)) throw std::invalid_argument("operator.lambda must be > 0");
  if (!(Lambda >= lambda)) throw std::invalid_argument("operator.Lambda must be >= lambda");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0))
    throw std::invalid_argument("operator.alpha0 must lie in (0, 1]");
  if (std::abs(eval(SymMat::zero(d))) > 1e-14)
    throw std::logic_error("operator violates F(0) = 0");
}

namespace {

// Coefficient diagonals of the two Bellman members: spectra inside
// [lambda, Lambda], distinct as long as lambda < Lambda.
double bellman_member(const SymMat& M, double lo, double hi, int flip) {
  double t = 0.0;
  for (int i = 0; i < M.d; ++i) t += (((i + flip) % 2 == 0) ? lo : hi) * M.m[i];
  return -t;
}

}  // namespace

double EllipticOperator::eval(const SymMat& M) const {
  switch (kind) {
    case OperatorKind::negative_trace:
      return -M.trace();
    case OperatorKind::pucci_minus: {
      auto e = M.eigenvalues();
      double sp = 0.0, sn = 0.0;
      for (int i = 0; i < M.d; ++i) (e[i] >= 0.0 ? sp : sn) += e[i];
      return -(Lambda * sp + lambda * sn);
    }
    case OperatorKind::pucci_plus: {
      auto e = M.eigenvalues();
      double sp = 0.0, sn = 0.0;
      for (int i = 0; i < M.d; ++i) (e[i] >= 0.0 ? sp : sn) += e[i];
      return -(lambda * sp + Lambda * sn);
    }
    case OperatorKind::bellman_pair:
      return std::min(bellman_member(M, lambda, Lambda, 0),
                      bellman_member(M, lambda, Lambda, 1));
  }
  return 0.0;
}

double EllipticOperator::eval_dense(const double M[3][3], int d, double sym_tol) const {
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::abs(M[i][j] - M[j][i]) > sym_tol)
        throw std::invalid_argument("eval: matrix is not symmetric");
  SymMat S = SymMat::zero(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) S.set(i, j, M[i][j]);
  return eval(S);
}

EllipticityReport check_ellipticity(const EllipticOperator& op, int d, long trials,
                                    uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("check_ellipticity: trials must be >= 1");
  EllipticityReport rep;
  rep.trials = trials;
  Rng rng(Rng::mix(seed, 0x1CEDBEEF));
  for (long t = 0; t < trials; ++t) {
    SymMat M = random_symmetric(rng, d, 2.0);
    SymMat N = (t % 16 == 0) ? SymMat::zero(d) : random_psd(rng, d, 2.0);
    const double n_spec = N.max_eigenvalue();
    const double n_trace = N.trace();
    const double drop = op.eval(M) - op.eval(M.plus(N));
    if (n_spec < 1e-12) {
      ++rep.degenerate;
      continue;
    }
    const double r_spec = drop / n_spec;
    const double r_trace = drop / n_trace;
    rep.min_ratio_spec = std::min(rep.min_ratio_spec, r_spec);
    rep.max_ratio_spec = std::max(rep.max_ratio_spec, r_spec);
    rep.min_ratio_trace = std::min(rep.min_ratio_trace, r_trace);
    rep.max_ratio_trace = std::max(rep.max_ratio_trace, r_trace);
    const double slack = 1e-9 * (1.0 + std::abs(drop));
    if (r_spec < op.lambda - slack || r_spec > d * op.Lambda + slack) {
      rep.pass = false;
      if (rep.violation.empty()) {
        std::ostringstream os;
        os << "ratio " << r_spec << " outside [" << op.lambda << ", " << d * op.Lambda
           << "]; M = [";
        for (int i = 0; i < 6; ++i) os << M.m[i] << (i < 5 ? " " : "], N = [");
        for (int i = 0; i < 6; ++i) os << N.m[i] << (i < 5 ? " " : "]");
        rep.violation = os.str();
      }
    }
  }
  return rep;
}

}  // namespace ftlab
