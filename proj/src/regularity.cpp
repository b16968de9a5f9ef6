#include "ftlab/regularity.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <stdexcept>

#include "ftlab/rng.hpp"

namespace ftlab {

std::vector<std::pair<Vec, double>> FieldView::ball_samples(const Vec& x0, double r) const {
  std::vector<std::pair<Vec, double>> out;
  if (grid_backed()) {
    const GridSpec& g = field->grid;
    MultiIndex lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < g.d; ++k) {
      lo[k] = std::max(0, static_cast<int>(std::ceil((x0[k] - r + 1.0) / g.h - 1e-12)));
      hi[k] = std::min(g.n - 1, static_cast<int>(std::floor((x0[k] + r + 1.0) / g.h + 1e-12)));
    }
    MultiIndex mi = lo;
    while (true) {
      const Vec x = g.point(mi);
      if (norm(sub(x, x0, g.d), g.d) <= r * (1.0 + 1e-12))
        out.emplace_back(x, field->at(mi));
      int k = g.d - 1;
      while (k >= 0) {
        if (++mi[k] <= hi[k]) break;
        mi[k] = lo[k];
        --k;
      }
      if (k < 0) break;
    }
    return out;
  }
  // Formula mode: fixed lattice of the bounding square, filtered to the ball.
  const int m = 17;
  GridSpec lattice = GridSpec::make(d, m);
  lattice.for_each([&](const MultiIndex& mi, long) {
    Vec y = lattice.point(mi);  // in [-1,1]^d
    Vec x = add(x0, scale(y, r, d), d);
    if (norm(sub(x, x0, d), d) <= r * (1.0 + 1e-12)) out.emplace_back(x, fn(x));
  });
  return out;
}

namespace {

// Weighted least-squares affine fit on centered, scaled coordinates.
AffineMap weighted_ls(const std::vector<std::pair<Vec, double>>& samples, int d,
                      const std::vector<double>& w, const Vec& x0, double r) {
  // Normal equations in variables (a, b·) with features (1, (x - x0)/r).
  const int m = d + 1;
  double A[4][4] = {};
  double rhs[4] = {};
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& [x, u] = samples[i];
    double phi[4] = {1, 0, 0, 0};
    for (int k = 0; k < d; ++k) phi[k + 1] = (x[k] - x0[k]) / r;
    for (int a = 0; a < m; ++a) {
      rhs[a] += w[i] * phi[a] * u;
      for (int b = 0; b < m; ++b) A[a][b] += w[i] * phi[a] * phi[b];
    }
  }
  // Gaussian elimination with partial pivoting on the tiny system.
  int piv[4] = {0, 1, 2, 3};
  for (int c = 0; c < m; ++c) {
    int best = c;
    for (int rr = c + 1; rr < m; ++rr)
      if (std::abs(A[rr][c]) > std::abs(A[best][c])) best = rr;
    std::swap(A[c], A[best]);
    std::swap(rhs[c], rhs[best]);
    std::swap(piv[c], piv[best]);
    const double p = A[c][c];
    if (std::abs(p) < 1e-300) continue;
    for (int rr = c + 1; rr < m; ++rr) {
      const double f = A[rr][c] / p;
      for (int cc = c; cc < m; ++cc) A[rr][cc] -= f * A[c][cc];
      rhs[rr] -= f * rhs[c];
    }
  }
  double z[4] = {};
  for (int rr = m - 1; rr >= 0; --rr) {
    double s = rhs[rr];
    for (int cc = rr + 1; cc < m; ++cc) s -= A[rr][cc] * z[cc];
    z[rr] = std::abs(A[rr][rr]) < 1e-300 ? 0.0 : s / A[rr][rr];
  }
  // Undo the coordinate scaling: u ~ z0 + z . (x - x0)/r.
  AffineMap ell;
  Vec b{0, 0, 0};
  for (int k = 0; k < d; ++k) b[k] = z[k + 1] / r;
  ell.b = b;
  ell.a = z[0] - dot(b, x0, d);
  return ell;
}

double sup_error(const std::vector<std::pair<Vec, double>>& samples, int d,
                 const AffineMap& ell) {
  double worst = 0.0;
  for (const auto& [x, u] : samples) worst = std::max(worst, std::abs(u - ell.eval(x, d)));
  return worst;
}

}  // namespace

AffineFit best_affine_on(const std::vector<std::pair<Vec, double>>& samples, int d) {
  if (samples.empty()) throw std::runtime_error("too few nodes for affine fit");
  Vec x0{0, 0, 0};
  double r = 0.0;
  for (const auto& [x, u] : samples) {
    (void)u;
    for (int k = 0; k < d; ++k) x0[k] += x[k];
  }
  for (int k = 0; k < d; ++k) x0[k] /= static_cast<double>(samples.size());
  for (const auto& [x, u] : samples) {
    (void)u;
    r = std::max(r, norm(sub(x, x0, d), d));
  }
  if (r <= 0.0) r = 1.0;

  // Lawson iteration: reweight by residual magnitude; the weighted LS
  // solutions converge to the sup-norm (Chebyshev) fit. Track the best
  // iterate by true sup error; ties between optima are immaterial at the
  // 1e-13 settle tolerance.
  std::vector<double> w(samples.size(), 1.0 / static_cast<double>(samples.size()));
  AffineMap ls = weighted_ls(samples, d, w, x0, r);
  const double ls_err = sup_error(samples, d, ls);
  AffineFit best;
  best.ell = ls;
  best.sup_err = ls_err;
  best.support = static_cast<int>(samples.size());

  double scale_u = 0.0;
  for (const auto& [x, u] : samples) {
    (void)x;
    scale_u = std::max(scale_u, std::abs(u));
  }
  if (ls_err <= 64.0 * DBL_EPSILON * std::max(1.0, scale_u)) {
    best.ls_gap = 0.0;
    return best;  // data already affine to round-off
  }

  AffineMap cur = ls;
  int stale = 0;
  for (int it = 0; it < 400 && stale < 30; ++it) {
    double wsum = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
      const auto& [x, u] = samples[i];
      w[i] *= std::abs(u - cur.eval(x, d)) + 1e-30;
      wsum += w[i];
    }
    if (!(wsum > 0.0)) break;
    for (auto& wi : w) wi /= wsum;
    cur = weighted_ls(samples, d, w, x0, r);
    const double err = sup_error(samples, d, cur);
    if (err < best.sup_err * (1.0 - 1e-13)) {
      best.ell = cur;
      best.sup_err = err;
      stale = 0;
    } else {
      ++stale;
    }
  }

  // Equioscillation polish: Lawson creeps near optima with degenerate active
  // sets; a least-squares solve of s_i (u_i - ell(x_i)) = t on the near-active
  // points snaps onto the exact Chebyshev solution when the signs are right.
  // The inclusion window shrinks so clusters of almost-active points stop
  // biasing the solve.
  const double windows[] = {0.95, 0.99, 0.999, 0.9999, 0.99999, 0.999999};
  for (double window : windows) {
    std::vector<size_t> active;
    std::vector<double> sign;
    for (size_t i = 0; i < samples.size(); ++i) {
      const auto& [x, u] = samples[i];
      const double res = u - best.ell.eval(x, d);
      if (std::abs(res) >= window * best.sup_err) {
        active.push_back(i);
        sign.push_back(res >= 0 ? 1.0 : -1.0);
      }
    }
    if (active.size() < static_cast<size_t>(d) + 2) continue;
    // Unknowns (a, b, t): minimize sum over active of
    // (s_i u_i - s_i a - s_i b.(x-x0)/r - t)^2.
    const int m = d + 2;
    double A[5][5] = {};
    double rhs[5] = {};
    for (size_t ii = 0; ii < active.size(); ++ii) {
      const auto& [x, u] = samples[active[ii]];
      double phi[5] = {sign[ii], 0, 0, 0, -1.0};
      for (int k = 0; k < d; ++k) phi[k + 1] = sign[ii] * (x[k] - x0[k]) / r;
      phi[d + 1] = -1.0;
      const double y = sign[ii] * u;
      for (int a = 0; a < m; ++a) {
        rhs[a] += phi[a] * y;
        for (int b = 0; b < m; ++b) A[a][b] += phi[a] * phi[b];
      }
    }
    for (int c = 0; c < m; ++c) {
      int piv = c;
      for (int rr = c + 1; rr < m; ++rr)
        if (std::abs(A[rr][c]) > std::abs(A[piv][c])) piv = rr;
      for (int cc = 0; cc < m; ++cc) std::swap(A[c][cc], A[piv][cc]);
      std::swap(rhs[c], rhs[piv]);
      if (std::abs(A[c][c]) < 1e-300) continue;
      for (int rr = c + 1; rr < m; ++rr) {
        const double f = A[rr][c] / A[c][c];
        for (int cc = c; cc < m; ++cc) A[rr][cc] -= f * A[c][cc];
        rhs[rr] -= f * rhs[c];
      }
    }
    double z[5] = {};
    bool singular = false;
    for (int rr = m - 1; rr >= 0; --rr) {
      double s = rhs[rr];
      for (int cc = rr + 1; cc < m; ++cc) s -= A[rr][cc] * z[cc];
      if (std::abs(A[rr][rr]) < 1e-300) {
        singular = true;
        break;
      }
      z[rr] = s / A[rr][rr];
    }
    if (singular) continue;
    AffineMap cand;
    Vec b{0, 0, 0};
    for (int k = 0; k < d; ++k) b[k] = z[k + 1] / r;
    cand.b = b;
    cand.a = z[0] - dot(b, x0, d);
    const double err = sup_error(samples, d, cand);
    if (err < best.sup_err * (1.0 - 1e-15)) {
      best.ell = cand;
      best.sup_err = err;
    }
  }
  best.ls_gap = ls_err - best.sup_err;
  return best;
}

AffineFit best_affine(const FieldView& u, const Vec& x0, double r) {
  auto samples = u.ball_samples(x0, r);
  long needed = 1;
  for (int k = 0; k < u.d; ++k) needed *= 3;
  if (static_cast<long>(samples.size()) < needed)
    throw std::runtime_error("too few nodes in ball for affine fit (need >= 3^d)");
  return best_affine_on(samples, u.d);
}

std::vector<double> alpha_sequence(const DegeneracyLaw& law, const Vec& x0, double rho,
                                   double alpha0, double eta, int kmax,
                                   const GridSpec* grid) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  if (!(eta > 0.0 && eta < alpha0)) throw std::invalid_argument("eta must lie in (0, alpha0)");
  const int d = grid ? grid->d : 2;
  const int phases = law.phase_count();

  auto ball_max_beta = [&](int i, double r) {
    double worst = law.beta_of_phase(i, x0, d);  // center always counted
    bool any_node = false;
    if (grid) {
      MultiIndex lo{0, 0, 0}, hi{0, 0, 0};
      for (int k = 0; k < d; ++k) {
        lo[k] = std::max(0, static_cast<int>(std::ceil((x0[k] - r + 1.0) / grid->h - 1e-12)));
        hi[k] = std::min(grid->n - 1,
                         static_cast<int>(std::floor((x0[k] + r + 1.0) / grid->h + 1e-12)));
      }
      MultiIndex mi = lo;
      while (true) {
        const Vec x = grid->point(mi);
        if (norm(sub(x, x0, d), d) <= r * (1.0 + 1e-12) && norm(x, d) <= 1.0) {
          worst = std::max(worst, law.beta_of_phase(i, x, d));
          any_node = true;
        }
        int k = d - 1;
        while (k >= 0) {
          if (++mi[k] <= hi[k]) break;
          mi[k] = lo[k];
          --k;
        }
        if (k < 0) break;
      }
    }
    if (!any_node) {
      // Formula mode: closed-form exponent fields sampled on a lattice.
      const int m = 9;
      GridSpec lattice = GridSpec::make(d, m);
      lattice.for_each([&](const MultiIndex& mi, long) {
        Vec y = lattice.point(mi);
        Vec x = add(x0, scale(y, r, d), d);
        if (norm(sub(x, x0, d), d) <= r * (1.0 + 1e-12) && norm(x, d) <= 1.0)
          worst = std::max(worst, law.beta_of_phase(i, x, d));
      });
    }
    return worst;
  };

  std::vector<double> alphas(kmax + 1, 0.0);
  std::vector<double> prev_max(phases, 1e300);
  for (int k = 0; k <= kmax; ++k) {
    const double r = std::pow(rho, k);
    double a = alpha0 - eta;
    for (int i = 0; i < phases; ++i) {
      double mk = std::min(ball_max_beta(i, r), prev_max[i]);  // nested balls
      prev_max[i] = mk;
      a = std::min(a, 1.0 / (1.0 + mk));
    }
    alphas[k] = a;
  }
  return alphas;
}

double predicted_pointwise(const DegeneracyLaw& law, const Vec& x0, double alpha0,
                           double eta, int d) {
  double a = alpha0 - eta;
  for (int i = 0; i < law.phase_count(); ++i)
    a = std::min(a, 1.0 / (1.0 + law.beta_of_phase(i, x0, d)));
  return a;
}

double predicted_pointwise_active(const DegeneracyLaw& law, const Vec& x0, double u_val,
                                  const Vec& grad, double alpha0, double eta, int d) {
  const int i = law.classify(u_val, grad, d);
  return std::min(alpha0 - eta, 1.0 / (1.0 + law.beta_of_phase(i, x0, d)));
}

double predicted_local(double beta_M, double alpha0, double eta) {
  if (beta_M < 0.0) throw std::invalid_argument("beta_M must be >= 0");
  return std::min(alpha0 - eta, 1.0 / (1.0 + beta_M));
}

IterateResult iterate(const FieldView& u, const Vec& x0, double rho,
                      const DegeneracyLaw& law, double alpha0, double eta, double K,
                      int kmax) {
  IterateResult out;
  out.K = K;
  const GridSpec* grid = u.grid_backed() ? &u.field->grid : nullptr;
  out.alphas = alpha_sequence(law, x0, rho, alpha0, eta, kmax, grid);

  const double alpha_lim = predicted_pointwise(law, x0, alpha0, eta, u.d);
  if (!law.modulus.is_zero()) {
    const double gap = 0.5 * (alpha0 - alpha_lim);
    auto thr = max_admissible_ratio(law.modulus, std::max(gap, 1e-12));
    out.delta1 = thr.admissible ? thr.rho : 0.0;
    out.rho_admissible = thr.admissible && rho <= thr.rho * (1.0 + 1e-12);
  } else {
    out.delta1 = std::exp(-1.0);
    out.rho_admissible = true;
  }

  // Row 0 of the bound family is |u - ell_0| = |u| <= K on B_1(x0); it seeds
  // K* so the first coefficient increment is judged against the same base.
  for (const auto& [x, val] : u.ball_samples(x0, 1.0)) {
    (void)x;
    out.K_star = std::max(out.K_star, std::abs(val));
  }

  AffineMap prev;  // ell_0 = 0
  double prev_alpha = out.alphas[0];
  for (int k = 1; k <= kmax; ++k) {
    const double r = std::pow(rho, k);
    AffineFit fit;
    try {
      fit = best_affine(u, x0, r);
    } catch (const std::runtime_error&) {
      break;  // radius no longer resolved
    }
    IterationRow row;
    row.k = k;
    row.radius = r;
    row.alpha_k = out.alphas[k];
    row.ell = fit.ell;
    row.sup_err = fit.sup_err;
    row.bound_unit = std::pow(rho, k * (1.0 + row.alpha_k));
    row.da = std::abs(fit.ell.a + dot(fit.ell.b, x0, u.d) -
                      (prev.a + dot(prev.b, x0, u.d)));
    row.db = norm(sub(fit.ell.b, prev.b, u.d), u.d);
    row.da_bound_unit = std::pow(rho, (k - 1) * (1.0 + prev_alpha));
    row.db_bound_unit = std::pow(rho, (k - 1) * prev_alpha);
    row.ls_gap = fit.ls_gap;
    row.sup_ok = row.sup_err <= K * row.bound_unit * (1.0 + 1e-12);
    out.all_sup_ok = out.all_sup_ok && row.sup_ok;
    out.K_star = std::max(out.K_star, row.sup_err / row.bound_unit);
    out.coef_constant = std::max(out.coef_constant,
                                 std::max(row.da / row.da_bound_unit,
                                          row.db / row.db_bound_unit));
    out.rows.push_back(row);
    prev = fit.ell;
    prev_alpha = row.alpha_k;
  }
  out.kmax_used = static_cast<int>(out.rows.size());
  if (out.kmax_used < 3)
    throw std::runtime_error("RadiusUnderResolved: fewer than 3 resolvable iteration rows");
  return out;
}

ExponentFit estimate_exponent(const FieldView& u, const Vec& x0, double rho, int kmax) {
  ExponentFit out;
  double scale_u = std::abs(u.value(x0));
  std::vector<double> xs, ys;
  AffineMap last_b;
  int resolved = 0;
  for (int k = 1; k <= kmax; ++k) {
    const double r = std::pow(rho, k);
    AffineFit fit;
    try {
      fit = best_affine(u, x0, r);
    } catch (const std::runtime_error&) {
      break;
    }
    ++resolved;
    last_b = fit.ell;
    for (const auto& [x, val] : u.ball_samples(x0, r)) {
      (void)x;
      scale_u = std::max(scale_u, std::abs(val));
    }
    if (fit.sup_err > 10.0 * DBL_EPSILON * std::max(1.0, scale_u)) {
      xs.push_back(k * std::log(rho));
      ys.push_back(std::log(fit.sup_err));
    }
  }
  out.used_rows = static_cast<int>(xs.size());
  out.b_limit = last_b.b;
  if (out.used_rows < 3) {
    out.degenerate = true;
    return out;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double m = static_cast<double>(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.alpha_raw = slope - 1.0;
  out.alpha_hat = std::min(out.alpha_raw, 1.0);
  const double ss_res_num = (m * sxy - sx * sy);
  const double denom = (m * sxx - sx * sx) * (m * syy - sy * sy);
  out.r2 = denom > 0.0 ? (ss_res_num * ss_res_num) / denom : 1.0;
  return out;
}

Normalized normalize(const ScalarField& u, const ScalarField& f, double eps0) {
  if (!(eps0 > 0.0)) throw std::invalid_argument("eps0 must be > 0");
  Normalized out;
  const double nu = u.sup_interior();
  const double nf = f.sup_interior();
  const double denom = nu + nf / eps0;
  out.K = denom > 1.0 ? 1.0 / denom : 1.0;
  out.u_bar = u;
  out.f_bar = f;
  for (auto& x : out.u_bar.v) x *= out.K;
  for (auto& x : out.f_bar.v) x *= out.K;
  return out;
}

Rescaled rescale(const ScalarField& u, const Vec& x0, const AffineMap& ell, double rho,
                 int k, double alpha_k, const EllipticOperator& op, int n_out) {
  Rescaled out;
  const int d = u.grid.d;
  const double rk = std::pow(rho, k);
  if (k > 0) {
    FieldView view = FieldView::of(u);
    long count = static_cast<long>(view.ball_samples(x0, rk).size());
    long needed = 1;
    for (int i = 0; i < d; ++i) needed *= 9;
    if (count < needed)
      throw std::runtime_error("rescale: ball under-resolved (need >= 9^d nodes)");
  }
  const double denom = std::pow(rho, k * (1.0 + alpha_k));
  GridSpec g = GridSpec::make(d, n_out, 1);
  out.v = ScalarField::sample(g, [&](const Vec& y) {
    Vec x = add(x0, scale(y, rk, d), d);
    for (int i = 0; i < d; ++i) x[i] = std::clamp(x[i], -1.0, 1.0);
    return (interpolate(u, x) - ell.eval(x, d)) / denom;
  });
  // Positive 1-homogeneity of every implemented kind makes the conjugated
  // operator F itself; spot-check the identity at a few matrices.
  out.op = op;
  const double s = std::pow(rho, k * (alpha_k - 1.0));
  for (double t : {-1.0, 0.4, 2.0}) {
    SymMat M = SymMat::identity(d).scaled(t);
    M.set(0, std::min(1, d - 1), 0.3 * t);
    const double conj = (1.0 / s) * op.eval(M.scaled(s));
    if (std::abs(conj - op.eval(M)) > 1e-9 * (1.0 + std::abs(conj)))
      throw std::logic_error("rescale: operator conjugation is not the identity");
  }
  out.sup_norm = out.v.sup_interior();
  return out;
}

double holder_seminorm(const ScalarField& u, double theta, const Vec& center,
                       double radius, uint64_t seed) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  const GridSpec& g = u.grid;
  std::vector<long> ids;
  g.for_each_interior([&](const MultiIndex& mi, long id) {
    if (norm(sub(g.point(mi), center, g.d), g.d) <= radius) ids.push_back(id);
  });
  if (ids.size() < 2) return 0.0;
  double worst = 0.0;
  auto ratio = [&](long i, long j) {
    if (i == j) return 0.0;
    const Vec xi = g.point(g.unpack(i)), xj = g.point(g.unpack(j));
    const double dist = norm(sub(xi, xj, g.d), g.d);
    return std::abs(u.at(i) - u.at(j)) / std::pow(dist, theta);
  };
  // Nearest node to the center is paired against everything.
  long cid = ids[0];
  double cbest = 1e300;
  for (long id : ids) {
    const double dcen = norm(sub(g.point(g.unpack(id)), center, g.d), g.d);
    if (dcen < cbest) {
      cbest = dcen;
      cid = id;
    }
  }
  for (long id : ids) worst = std::max(worst, ratio(cid, id));
  const size_t max_pairs = 200000;
  if (ids.size() * (ids.size() - 1) / 2 <= max_pairs) {
    for (size_t a = 0; a < ids.size(); ++a)
      for (size_t b = a + 1; b < ids.size(); ++b)
        worst = std::max(worst, ratio(ids[a], ids[b]));
  } else {
    Rng rng(Rng::mix(seed, 0x5E31A0));
    for (size_t t = 0; t < max_pairs; ++t) {
      const long i = ids[rng.next_u64() % ids.size()];
      const long j = ids[rng.next_u64() % ids.size()];
      worst = std::max(worst, ratio(i, j));
    }
  }
  return worst;
}

}  // namespace ftlab
