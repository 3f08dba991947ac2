#include "mmd/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "mmd/error.hpp"

namespace mmd {

namespace {

double ipow(double x, int k) { return std::pow(x, static_cast<double>(k)); }

// estimand e -> coefficient on cell c
constexpr int kWeights[4][4] = {{1, -1, 0, 0}, {0, 0, 1, -1}, {1, 0, -1, 0}, {0, 1, 0, -1}};

}  // namespace

void ExperimentParams::validate() const {
  if (N < 1) fail("invalid_N", "N must be >= 1");
  if (T < 1) fail("invalid_T", "T must be >= 1");
  if (p < 0) fail("invalid_order", "p must be >= 0");
  if (p >= T) fail("invalid_order", "p must be smaller than T (no estimable periods otherwise)");
  if (!(q1 > 0 && q1 < 1)) fail("invalid_q1", "q1 must lie in (0, 1)");
  if (!(q2 > 0 && q2 < 1)) fail("invalid_q2", "q2 must lie in (0, 1)");
  if (q1 == q2) fail("invalid_q", "q1 and q2 must differ");
  if (!(r1 > 0 && r1 < 1)) fail("invalid_r", "r_q1 must lie in (0, 1)");
  if (psi_d < 0 || psi_s < 0 || std::abs(psi_d + psi_s - 1.0) > 1e-9)
    fail("invalid_psi", "psi_d and psi_s must be non-negative and sum to 1");
  if (!(B > 0)) fail("invalid_B", "B must be positive");
}

GammaSet gamma_coefficients(const ExperimentParams& params) {
  params.validate();
  const double xs[4] = {params.q1, 1 - params.q1, params.q2, 1 - params.q2};
  double s1 = 0, s2 = 0, s3 = 0;
  for (double x : xs) {
    s1 += 1 / x;
    s2 += 1 / (x * x);
    const double u = 2 / x - 1;
    s3 += 2 / x * u * u;
  }
  const double n = params.N;
  const double c = 1.0 / (n * std::pow(params.T - params.p, 2));
  GammaSet g;
  if (params.N >= 2) {
    g.g1d = c * (8 * n + 2 * s1 - 16);
    g.g2d = c * (8 * n + 4 * s2 - 4 * s1);
  } else {
    g.g1d = c * (2 * s1);
    g.g2d = c * (4 * s2 - 4 * s1);
  }
  g.g3d = c * (s3 + 16 * (n - 1));
  g.g1s = c * (8 * n + 2 * s1 - 8);
  g.g2s = c * (4 * (s2 - s1));
  g.g3s = c * (s3 + 8 * (n - 1));
  g.g1 = params.psi_d * g.g1d + params.psi_s * g.g1s;
  g.g2 = params.psi_d * g.g2d + params.psi_s * g.g2s;
  g.g3 = params.psi_d * g.g3d + params.psi_s * g.g3s;
  g.theta = g.g2 / g.g1;
  return g;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::large_n: return "large_n";
    case Regime::small_n: return "small_n";
    case Regime::indeterminate: return "indeterminate";
  }
  return "?";
}

namespace {

bool large_n_holds(int N, double r1) { return N >= 1.0 / (1.0 - std::max(r1, 1 - r1)); }
bool small_n_holds(int N, double r1, int p) {
  return N <= 1.0 / (1.0 - ipow(std::min(r1, 1 - r1), p + 1));
}

}  // namespace

Regime regime_of(const ExperimentParams& params) {
  if (large_n_holds(params.N, params.r1)) return Regime::large_n;
  if (small_n_holds(params.N, params.r1, params.p)) return Regime::small_n;
  return Regime::indeterminate;
}

WorstCaseTerms worst_case_terms(const ExperimentParams& params, Regime regime) {
  if (regime == Regime::indeterminate)
    fail("regime_indeterminate", "worst-case terms need an explicit regime");
  const double n = params.N;
  const double b2 = params.B * params.B;
  WorstCaseTerms w;
  w.regime = regime;
  const size_t sz = static_cast<size_t>(params.p) + 2;
  w.alpha.assign(sz, {0, 0});
  w.beta.assign(sz, {0, 0});
  w.zeta.assign(sz, 0);
  for (int J = 1; J <= params.p + 1; ++J) {
    const size_t j = static_cast<size_t>(J);
    for (int qi = 0; qi < 2; ++qi) {
      const double ri = ipow(params.r_of(qi), -J);
      const double q = params.q_of(qi);
      const double qq = ipow(q, -J) + ipow(1 - q, -J);
      w.zeta[j] += ri * qq;
      if (regime == Regime::large_n)
        w.alpha[j][static_cast<size_t>(qi)] = b2 * (4 * (ri - 1) + ri * (qq - 4) / n);
      else
        w.alpha[j][static_cast<size_t>(qi)] = b2 * ri * qq / n;
    }
    const double ra = ipow(params.r1, -J), rb = ipow(params.r2(), -J);
    for (int z = 0; z < 2; ++z) {
      const double qa = z ? params.q1 : 1 - params.q1;
      const double qb = z ? params.q2 : 1 - params.q2;
      w.beta[j][static_cast<size_t>(z)] =
          b2 * (ra + rb + (ra * (ipow(qa, -J) - 1) + rb * (ipow(qb, -J) - 1)) / n);
    }
  }
  return w;
}

GeneralObjective worst_case_objective_general(const Design& design, const ExperimentParams& params) {
  params.validate();
  if (design.T != params.T) fail("horizon_mismatch", "design horizon differs from T");
  const DecisionContext ctx(design, params.p);
  const JHistogram h = j_histogram(ctx);
  const double scale = 1.0 / std::pow(params.T - params.p, 2);
  auto eval = [&](Regime r) {
    const WorstCaseTerms w = worst_case_terms(params, r);
    double s = 0;
    for (int j = 1; j <= params.p + 1; ++j) {
      const size_t k = static_cast<size_t>(j);
      s += static_cast<double>(h.at(j)) *
           (params.psi_d * (w.alpha[k][0] + w.alpha[k][1]) + params.psi_s * (w.beta[k][0] + w.beta[k][1]));
    }
    return s * scale;
  };
  GeneralObjective out;
  out.large_n = eval(Regime::large_n);
  out.small_n = eval(Regime::small_n);
  out.regime = regime_of(params);
  if (out.regime == Regime::large_n) out.value = out.large_n;
  if (out.regime == Regime::small_n) out.value = out.small_n;
  return out;
}

double worst_case_objective_closed(const Design& d, const ExperimentParams& params) {
  params.validate();
  if (d.T != params.T) fail("horizon_mismatch", "design horizon differs from T");
  if (std::abs(params.r1 - 0.5) > 1e-12)
    fail("closed_form_requires_half", "closed-form objective assumes r_q1 = r_q2 = 0.5");
  if (!validate_candidate(d, params.p))
    fail_infeasible("infeasible_design",
                    "design violates t_1 >= p+2, t_L <= T-p or t_{l+1} - t_{l-1} >= p");
  const GammaSet g = gamma_coefficients(params);
  const int L = d.L();
  const double p = params.p;
  double sq = 0;
  for (int l = 0; l <= L; ++l) sq += std::pow(d.point(l + 1) - d.point(l), 2);
  double pen = 0;
  for (int l = 2; l <= L; ++l) {
    const double v = std::max(0.0, p - d.point(l) + d.point(l - 1));
    pen += v * v;
  }
  const double first = sq + (L - 1) * p * p + 2 * p * (d.point(L) - d.point(1));
  return params.B * params.B * (first * g.g1 + L * p * p * g.g2 + pen * g.g3);
}

namespace {

Design build_design(int T, int a, int b, bool equal_ends, int nb1, int nb) {
  std::vector<int> pts{1};
  int cur = 1 + a;
  pts.push_back(cur);
  for (int k = 0; k < nb1; ++k) pts.push_back(cur += b + 1);
  for (int k = 0; k < nb; ++k) pts.push_back(cur += b);
  // the remaining interval runs up to the sentinel T+1
  const int last = equal_ends ? a : a + 1;
  if (cur + last != T + 1) fail("internal", "interval construction does not close at T+1");
  if (pts.back() > T) pts.pop_back();
  return Design::make(T, std::move(pts));
}

}  // namespace

DesignSearchResult optimal_design(const ExperimentParams& params) {
  params.validate();
  if (std::abs(params.r1 - 0.5) > 1e-12)
    fail("closed_form_requires_half", "design search assumes r_q1 = r_q2 = 0.5");
  const GammaSet g = gamma_coefficients(params);
  const int T = params.T;
  const int p = params.p;
  DesignSearchResult res;
  res.theta_star = g.theta;
  if (p == 0) {
    res.design = make_standard_design(StandardKind::independent, T, 0);
    res.a_star = 1;
    res.b_star = 1;
    res.equal_ends = true;
    res.L = res.design.L();
    res.objective = T >= 2 ? worst_case_objective_closed(res.design, params) : 0.0;
    return res;
  }
  const double th = g.theta;
  const double pp = static_cast<double>(p) * p;
  bool found = false;
  double best = 0;
  std::tuple<int, int, int> best_key{0, 0, 0};
  int best_nb1 = 0, best_nb = 0;
  for (int b = std::max(1, (p + 1) / 2); b <= T; ++b) {
    const bool floor_branch = th <= static_cast<double>(b) * (b + 1) / pp - 1;
    for (int a = p + 1; a <= T; ++a) {
      for (int cs = 0; cs < 2; ++cs) {
        const int X = T - 2 * a - cs;
        if (X < 0) continue;
        const int M = floor_branch ? X / b : (X + b) / (b + 1);
        const int nb = M * (b + 1) - X;
        const int nb1 = X - M * b;
        if (nb < 0 || nb1 < 0) continue;
        const double ends = cs == 0 ? 2.0 * a * a : static_cast<double>(a) * a + (a + 1.0) * (a + 1.0);
        const double obj = ends + th * pp + X * (2.0 * b + 2.0 * p + 1) + M * ((th + 1) * pp - b * (b + 1.0));
        const std::tuple<int, int, int> key{b, a, cs};
        const double tol = 1e-9 * std::max(1.0, std::abs(best));
        if (!found || obj < best - tol || (std::abs(obj - best) <= tol && key < best_key)) {
          found = true;
          best = obj;
          best_key = key;
          best_nb1 = nb1;
          best_nb = nb;
        }
      }
    }
  }
  if (!found)
    fail_infeasible("horizon_too_short", "horizon too short: no feasible (a, b) for T=" + std::to_string(T) +
                                             ", p=" + std::to_string(p));
  auto [b, a, cs] = best_key;
  res.a_star = a;
  res.b_star = b;
  res.equal_ends = cs == 0;
  res.design = build_design(T, a, b, res.equal_ends, best_nb1, best_nb);
  res.L = res.design.L();
  if (!validate_candidate(res.design, p))
    fail_infeasible("horizon_too_short", "horizon too short: constructed design is not feasible");
  res.objective = worst_case_objective_closed(res.design, params);
  return res;
}

ClosedFormResult closed_form_design(const ExperimentParams& params) {
  params.validate();
  const GammaSet g = gamma_coefficients(params);
  ClosedFormResult out;
  out.theta_star = g.theta;
  const int p = params.p;
  if (p == 0) {
    out.design = make_standard_design(StandardKind::independent, params.T, 0);
    out.source = "independent";
    return out;
  }
  StandardKind kind;
  if (g.theta <= 1.0 / p) {
    kind = StandardKind::star1;
  } else if (g.theta <= (3.0 * p + 2) / (static_cast<double>(p) * p)) {
    kind = StandardKind::star2;
  } else {
    out.design = optimal_design(params).design;
    out.source = "algorithm";
    return out;
  }
  try {
    out.design = make_standard_design(kind, params.T, p);
    out.source = to_string(kind);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::infeasible) throw;
    out.design = optimal_design(params).design;
    out.source = "algorithm";
    out.fallback = true;
  }
  return out;
}

double selection_objective(const ExperimentParams& params, const JHistogram& hist, double r1,
                           Regime regime) {
  const double n = params.N;
  const double r2 = 1 - r1;
  double s = 0;
  for (int j = 1; j <= hist.max_j(); ++j) {
    const double rs = ipow(r1, -j) + ipow(r2, -j);
    const double zeta = ipow(r1, -j) * (ipow(params.q1, -j) + ipow(1 - params.q1, -j)) +
                        ipow(r2, -j) * (ipow(params.q2, -j) + ipow(1 - params.q2, -j));
    double term;
    if (regime == Regime::large_n)
      term = (4 * params.psi_d + 2 * params.psi_s) * rs * (1 - 1 / n) - 8 * params.psi_d + zeta / n;
    else
      term = 2 * params.psi_s * rs * (1 - 1 / n) + zeta / n;
    s += static_cast<double>(hist.at(j)) * term;
  }
  return s;
}

namespace {

double minimize_r(const ExperimentParams& params, const JHistogram& hist, Regime regime) {
  auto f = [&](double r) { return selection_objective(params, hist, r, regime); };
  const int n = 2000;
  int bi = 1;
  double bv = std::numeric_limits<double>::infinity();
  for (int k = 1; k < n; ++k) {
    const double v = f(static_cast<double>(k) / n);
    if (v < bv) {
      bv = v;
      bi = k;
    }
  }
  double lo = static_cast<double>(bi - 1) / n, hi = static_cast<double>(bi + 1) / n;
  lo = std::max(lo, 1e-9);
  hi = std::min(hi, 1 - 1e-9);
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-10) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SelectionResult optimal_selection_probability(const ExperimentParams& params, const JHistogram& hist,
                                              bool large_n_limit) {
  params.validate();
  SelectionResult out;
  const int p = hist.max_j() - 1;
  const bool symmetric = std::abs(params.q1 + params.q2 - 1.0) < 1e-15;
  if (large_n_limit || symmetric) {
    out.r1_large_n = out.r1_small_n = 0.5;
  } else {
    out.r1_large_n = minimize_r(params, hist, Regime::large_n);
    out.r1_small_n = minimize_r(params, hist, Regime::small_n);
  }
  out.large_n_valid = large_n_limit || large_n_holds(params.N, out.r1_large_n);
  out.small_n_valid = !large_n_limit && small_n_holds(params.N, out.r1_small_n, p);
  if (out.large_n_valid) {
    out.regime = Regime::large_n;
    out.r1 = out.r1_large_n;
  } else if (out.small_n_valid) {
    out.regime = Regime::small_n;
    out.r1 = out.r1_small_n;
  } else {
    out.regime = Regime::indeterminate;
    out.r1 = out.r1_large_n;
  }
  out.r2 = 1 - out.r1;
  return out;
}

std::array<double, 4> exact_risk(const DecisionContext& ctx, const ExperimentParams& params,
                                 const CellTable& cells) {
  params.validate();
  const int p = ctx.p();
  const int T = ctx.T();
  const int N = cells.N;
  if (cells.T != T) fail("horizon_mismatch", "cell table horizon differs from design");
  // column sums per (t, c)
  std::vector<std::array<double, 4>> S(static_cast<size_t>(T) + 1, {0, 0, 0, 0});
  for (int t = 1; t <= T; ++t)
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < 4; ++c) S[static_cast<size_t>(t)][static_cast<size_t>(c)] += cells.at(i, t, c);
  const double qz[4] = {params.q1, 1 - params.q1, params.q2, 1 - params.q2};
  std::array<double, 4> var{0, 0, 0, 0};
  for (int t = p + 1; t <= T; ++t) {
    for (int t2 = p + 1; t2 <= T; ++t2) {
      const int o = ctx.overlap_count(t, t2);
      if (o == 0) continue;
      // m[c][c2] = sum_{i,j} Y_itc Y_jt2c2 (E[I I'] / (pi pi') - 1)
      double m[4][4];
      for (int c = 0; c < 4; ++c) {
        for (int c2 = 0; c2 < 4; ++c2) {
          const double ss = S[static_cast<size_t>(t)][static_cast<size_t>(c)] *
                            S[static_cast<size_t>(t2)][static_cast<size_t>(c2)];
          if (cell_q(c) != cell_q(c2)) {
            m[c][c2] = -ss;
            continue;
          }
          double D = 0;
          for (int i = 0; i < N; ++i) D += cells.at(i, t, c) * cells.at(i, t2, c2);
          const double rr = ipow(params.r_of(cell_q(c)), -o);
          const double diag = cell_z(c) == cell_z(c2) ? rr * ipow(qz[c], -o) : 0.0;
          m[c][c2] = (rr - 1) * (ss - D) + (diag - 1) * D;
        }
      }
      for (int e = 0; e < 4; ++e)
        for (int c = 0; c < 4; ++c)
          for (int c2 = 0; c2 < 4; ++c2)
            if (kWeights[e][c] && kWeights[e][c2]) var[static_cast<size_t>(e)] += kWeights[e][c] * kWeights[e][c2] * m[c][c2];
    }
  }
  const double scale = 1.0 / std::pow(static_cast<double>(N) * (T - p), 2);
  for (double& v : var) v *= scale;
  return var;
}

double combine_risks(const std::array<double, 4>& r, double psi_d, double psi_s) {
  return psi_d * (r[0] + r[1]) + psi_s * (r[2] + r[3]);
}

}  // namespace mmd
