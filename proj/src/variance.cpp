#include "mmd/variance.hpp"

#include <cmath>
#include <limits>

#include "mmd/error.hpp"

namespace mmd {

bool is_block_structured(const Design& d, int p) {
  const int L = d.L();
  if (L < 1 || p < 0) return false;
  const int a = d.point(1) - 1;
  if (a < p + 1) return false;
  if (d.point(L + 1) - d.point(L) != a) return false;
  if (L >= 2) {
    const int b = d.point(2) - d.point(1);
    if (b < p) return false;
    for (int l = 1; l < L; ++l)
      if (d.point(l + 1) - d.point(l) != b) return false;
  }
  return true;
}

BlockStructure block_structure(const Design& d, int p) {
  if (!is_block_structured(d, p))
    fail("not_block_structured",
         "design is not block-structured (needs points 1, a+1, a+1+b, ... with a last gap of a, a >= p+1, b >= p)");
  BlockStructure bs;
  bs.T = d.T;
  bs.p = p;
  bs.a = d.point(1) - 1;
  bs.b = d.L() >= 2 ? d.point(2) - d.point(1) : p;
  bs.K = d.L() + 3;
  bs.start.assign(static_cast<size_t>(bs.K), 0);
  for (int k = 1; k <= bs.K - 2; ++k) bs.start[static_cast<size_t>(k)] = d.point(k - 1);
  bs.start[static_cast<size_t>(bs.K - 1)] = d.T + 1;
  return bs;
}

BlockSums block_decompose(const BlockStructure& bs, const CellTable& cells) {
  if (cells.T != bs.T) fail("horizon_mismatch", "cell table horizon differs from design");
  BlockSums s;
  s.N = cells.N;
  const int n = bs.blocks();
  const auto N = static_cast<size_t>(cells.N);
  s.tilde.resize(static_cast<size_t>(n) + 1);
  s.check.resize(static_cast<size_t>(n) + 1);
  for (int k = 1; k <= n; ++k) {
    for (int c = 0; c < 4; ++c) {
      auto& tv = s.tilde[static_cast<size_t>(k)][static_cast<size_t>(c)];
      auto& cv = s.check[static_cast<size_t>(k)][static_cast<size_t>(c)];
      tv.assign(N, 0.0);
      cv.assign(N, 0.0);
      for (size_t i = 0; i < N; ++i) {
        for (int t = bs.first(k); t <= bs.last(k); ++t) tv[i] += cells.at(static_cast<int>(i), t, c);
        if (k >= 2)
          for (int t = bs.first(k); t <= bs.head_last(k); ++t) cv[i] += cells.at(static_cast<int>(i), t, c);
      }
    }
  }
  return s;
}

ObservedBlocks block_decompose(const BlockStructure& bs, const Trajectory& tr, double q1, double q2) {
  if (tr.T != bs.T)
    fail("horizon_mismatch", "horizon mismatch: trajectory has T=" + std::to_string(tr.T) +
                                 " but design has T=" + std::to_string(bs.T));
  const std::vector<int> cells = window_cells(tr, bs.p, q1, q2);
  const int n = bs.blocks();
  const auto N = static_cast<size_t>(tr.N);
  ObservedBlocks ob;
  ob.N = tr.N;
  ob.head.assign(static_cast<size_t>(n) + 1, std::vector<double>(N, 0.0));
  ob.tail.assign(static_cast<size_t>(n) + 1, std::vector<double>(N, 0.0));
  ob.head_cell.assign(static_cast<size_t>(n) + 1, std::vector<int>(N, -1));
  ob.tail_cell.assign(static_cast<size_t>(n) + 1, std::vector<int>(N, -1));
  for (int k = 1; k <= n; ++k) {
    const int hstart = bs.first(k);
    const int tstart = k == 1 ? bs.first(k) : bs.head_last(k) + 1;
    for (size_t i = 0; i < N; ++i) {
      const int ii = static_cast<int>(i);
      if (k >= 2)
        for (int t = hstart; t <= bs.head_last(k); ++t) ob.head[static_cast<size_t>(k)][i] += tr.y(ii, t);
      for (int t = tstart; t <= bs.last(k); ++t) ob.tail[static_cast<size_t>(k)][i] += tr.y(ii, t);
      ob.head_cell[static_cast<size_t>(k)][i] = cells[tr.idx(ii, bs.first(k))];
      ob.tail_cell[static_cast<size_t>(k)][i] = cells[tr.idx(ii, bs.last(k))];
    }
  }
  return ob;
}

namespace {

using Vec = std::vector<double>;

// x^T (off (J - I) + diag I) y
double qf(const Vec& x, const Vec& y, double off, double diag) {
  double sx = 0, sy = 0, xy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    xy += x[i] * y[i];
  }
  return off * (sx * sy - xy) + diag * xy;
}

struct Levels {
  int pos = 0, neg = 0;  // cells
  double pi_pos = 0, pi_neg = 0;
  bool direct = true;
};

Levels levels(const VarianceParams& vp, Estimand e) {
  Levels lv;
  switch (e) {
    case Estimand::direct_q1:
      lv = {cell_index(0, 1), cell_index(0, 0), vp.q1, 1 - vp.q1, true};
      break;
    case Estimand::direct_q2:
      lv = {cell_index(1, 1), cell_index(1, 0), vp.q2, 1 - vp.q2, true};
      break;
    case Estimand::spillover_z1:
      lv = {cell_index(0, 1), cell_index(1, 1), vp.q1, vp.q2, false};
      break;
    case Estimand::spillover_z0:
      lv = {cell_index(0, 0), cell_index(1, 0), 1 - vp.q1, 1 - vp.q2, false};
      break;
  }
  return lv;
}

double scale_of(const BlockStructure& bs, int N) {
  return 1.0 / (static_cast<double>(N) * N * std::pow(bs.T - bs.p, 2));
}

// A-type term for one cell (also B).
double a_term(const BlockSums& s, int n, int c, double pi) {
  double v = 0;
  for (int k = 1; k <= n; ++k) {
    const Vec& yt = s.tilde[static_cast<size_t>(k)][static_cast<size_t>(c)];
    v += qf(yt, yt, 1, 1 + 2 * (1 / pi - 1));
  }
  for (int k = 2; k <= n; ++k) {
    const Vec& yc = s.check[static_cast<size_t>(k)][static_cast<size_t>(c)];
    v += qf(yc, yc, 2, 2 + 2 * (1 / pi - 1) * (2 / pi + 1));
  }
  return v;
}

// D-type term: Ytilde_k(c) against Ycheck_{k+1}(c).
double d_term(const BlockSums& s, int n, int c, double pi) {
  double v = 0;
  for (int k = 1; k <= n - 1; ++k)
    v += qf(s.tilde[static_cast<size_t>(k)][static_cast<size_t>(c)], s.check[static_cast<size_t>(k) + 1][static_cast<size_t>(c)], 1,
            1 + 2 * (1 / pi - 1));
  return 2 * v;
}

// sum_k Ytilde_k(c) (off(J-I) + diag I) Ycheck_{k+1}(c2)
double cross_next(const BlockSums& s, int n, int c, int c2, double off, double diag) {
  double v = 0;
  for (int k = 1; k <= n - 1; ++k)
    v += qf(s.tilde[static_cast<size_t>(k)][static_cast<size_t>(c)], s.check[static_cast<size_t>(k) + 1][static_cast<size_t>(c2)], off, diag);
  return v;
}

double tilde_sum(const BlockSums& s, int k0, int k1, int c, int c2, double off, double diag) {
  double v = 0;
  for (int k = k0; k <= k1; ++k)
    v += qf(s.tilde[static_cast<size_t>(k)][static_cast<size_t>(c)], s.tilde[static_cast<size_t>(k)][static_cast<size_t>(c2)], off, diag);
  return v;
}

double check_sum(const BlockSums& s, int k0, int k1, int c, int c2, double off, double diag) {
  double v = 0;
  for (int k = std::max(k0, 2); k <= k1; ++k)
    v += qf(s.check[static_cast<size_t>(k)][static_cast<size_t>(c)], s.check[static_cast<size_t>(k)][static_cast<size_t>(c2)], off, diag);
  return v;
}

VarianceTerms common_terms(const BlockStructure& bs, const BlockSums& s, const Levels& lv) {
  VarianceTerms vt;
  const int n = bs.blocks();
  vt.scale = scale_of(bs, s.N);
  vt.A = a_term(s, n, lv.pos, lv.pi_pos);
  vt.B = a_term(s, n, lv.neg, lv.pi_neg);
  vt.D = d_term(s, n, lv.pos, lv.pi_pos);
  vt.E = d_term(s, n, lv.neg, lv.pi_neg);
  return vt;
}

}  // namespace

VarianceTerms exact_variance_terms(const BlockStructure& bs, const BlockSums& s, const VarianceParams& vp, Estimand e) {
  const Levels lv = levels(vp, e);
  const int n = bs.blocks();
  VarianceTerms vt = common_terms(bs, s, lv);
  if (lv.direct) {
    vt.C = tilde_sum(s, 1, n, lv.pos, lv.neg, -2, 2) + check_sum(s, 2, n, lv.pos, lv.neg, -4, 0);
    vt.F = 2 * cross_next(s, n, lv.pos, lv.neg, -1, 1);
    vt.G = 2 * cross_next(s, n, lv.neg, lv.pos, -1, 1);
  } else {
    vt.C = tilde_sum(s, 1, n, lv.pos, lv.neg, 2, 2);
    vt.F = 2 * cross_next(s, n, lv.pos, lv.neg, 1, 1);
    vt.G = 2 * cross_next(s, n, lv.neg, lv.pos, 1, 1);
  }
  return vt;
}

VarianceTerms upper_bound_terms(const BlockStructure& bs, const BlockSums& s, const VarianceParams& vp, Estimand e) {
  const Levels lv = levels(vp, e);
  const int n = bs.blocks();
  VarianceTerms vt = common_terms(bs, s, lv);
  const int P = lv.pos, M = lv.neg;
  if (lv.direct) {
    vt.C = tilde_sum(s, 1, n, P, M, -2, 0) + check_sum(s, 2, n, P, M, -4, 0) + tilde_sum(s, 1, n, P, P, 0, 1) +
           tilde_sum(s, 1, n, M, M, 0, 1);
    vt.F = 2 * cross_next(s, n, P, M, -1, 0) + tilde_sum(s, 1, n - 1, P, P, 0, 1) + check_sum(s, 2, n, M, M, 0, 1);
    vt.G = 2 * cross_next(s, n, M, P, -1, 0) + check_sum(s, 2, n, P, P, 0, 1) + tilde_sum(s, 1, n - 1, M, M, 0, 1);
  } else {
    vt.C = tilde_sum(s, 1, n, P, P, 1, 1) + tilde_sum(s, 1, n, M, M, 1, 1);
    vt.F = tilde_sum(s, 1, n - 1, P, P, 1, 1) + check_sum(s, 2, n, M, M, 1, 1);
    vt.G = check_sum(s, 2, n, P, P, 1, 1) + tilde_sum(s, 1, n - 1, M, M, 1, 1);
  }
  return vt;
}

namespace {

struct Masked {
  std::vector<Vec> h;  // Ycheck^obs_k o check I_k(c)
  std::vector<Vec> d;  // Delta Y^obs_k o I_k(c)
};

Masked mask(const ObservedBlocks& ob, int n, int c) {
  Masked m;
  m.h.assign(static_cast<size_t>(n) + 1, Vec(static_cast<size_t>(ob.N), 0.0));
  m.d.assign(static_cast<size_t>(n) + 1, Vec(static_cast<size_t>(ob.N), 0.0));
  for (int k = 1; k <= n; ++k)
    for (size_t i = 0; i < static_cast<size_t>(ob.N); ++i) {
      if (ob.head_cell[static_cast<size_t>(k)][i] == c) m.h[static_cast<size_t>(k)][i] = ob.head[static_cast<size_t>(k)][i];
      if (ob.tail_cell[static_cast<size_t>(k)][i] == c) m.d[static_cast<size_t>(k)][i] = ob.tail[static_cast<size_t>(k)][i];
    }
  return m;
}

double w(int eta) { return std::pow(2.0, -eta); }
double pw(double x, int k) { return std::pow(x, k); }

// estimator of Ytilde^T (J + 2(1/pi - 1) I) Ytilde + Ycheck^T (2J + ...) Ycheck for one block
double a_hat_block(const Masked& m, int k, int eta, double pi) {
  const Vec& h = m.h[static_cast<size_t>(k)];
  const Vec& d = m.d[static_cast<size_t>(k)];
  const double wk = w(eta);
  return qf(h, h, 3 / (wk * pw(pi, 2 * eta)), (4 / (pi * pi) - 1) / (wk * pw(pi, eta))) +
         qf(d, h, 2 / (wk * pw(pi, eta + 1)), (4 / pi - 2) / (wk * pw(pi, eta))) +
         qf(d, d, 1 / (0.5 * pi * pi), (2 / pi - 1) / (0.5 * pi));
}

// estimator of |Ytilde_k|^2
double sq_i_hat(const Masked& m, int k, int eta, double pi) {
  const Vec& h = m.h[static_cast<size_t>(k)];
  const Vec& d = m.d[static_cast<size_t>(k)];
  const double wk = w(eta);
  return qf(h, h, 0, 1 / (wk * pw(pi, eta))) + qf(d, h, 0, 2 / (wk * pw(pi, eta))) + qf(d, d, 0, 1 / (0.5 * pi));
}

// estimator of Ytilde_k^T J Ytilde_k
double sq_j_hat(const Masked& m, int k, int eta, double pi) {
  const Vec& h = m.h[static_cast<size_t>(k)];
  const Vec& d = m.d[static_cast<size_t>(k)];
  const double wk = w(eta);
  return qf(h, h, 1 / (wk * pw(pi, 2 * eta)), 1 / (wk * pw(pi, eta))) +
         qf(d, h, 2 / (wk * pw(pi, eta + 1)), 2 / (wk * pw(pi, eta))) + qf(d, d, 1 / (0.5 * pi * pi), 1 / (0.5 * pi));
}

// estimator of Ycheck_k^T (J or I) Ycheck_k
double head_hat(const Masked& m, int k, int eta, double pi, bool with_j) {
  const Vec& h = m.h[static_cast<size_t>(k)];
  const double wk = w(eta);
  return qf(h, h, with_j ? 1 / (wk * pw(pi, 2 * eta)) : 0.0, 1 / (wk * pw(pi, eta)));
}

double d_hat(const BlockStructure& bs, const Masked& m, int n, double pi) {
  double v = 0;
  for (int k = 1; k <= n - 1; ++k) {
    const int e0 = bs.eta(k), e1 = bs.eta(k + 1);
    const Vec& hn = m.h[static_cast<size_t>(k) + 1];
    v += qf(m.h[static_cast<size_t>(k)], hn, 1 / (pw(2, -e0 - 1) * pw(pi, e0 + e1)), (2 / pi - 1) / (pw(2, -e0 - 1) * pw(pi, e0 + 1)));
    v += qf(m.d[static_cast<size_t>(k)], hn, 1 / (0.25 * pw(pi, 3)), (2 / pi - 1) / (0.25 * pi * pi));
  }
  return 2 * v;
}

}  // namespace

VarianceTerms estimator_terms(const BlockStructure& bs, const ObservedBlocks& ob, const VarianceParams& vp, Estimand e) {
  const Levels lv = levels(vp, e);
  const int n = bs.blocks();
  const Masked P = mask(ob, n, lv.pos);
  const Masked M = mask(ob, n, lv.neg);
  const double pp = lv.pi_pos, pm = lv.pi_neg;
  VarianceTerms vt;
  vt.scale = scale_of(bs, ob.N);
  for (int k = 1; k <= n; ++k) {
    vt.A += a_hat_block(P, k, bs.eta(k), pp);
    vt.B += a_hat_block(M, k, bs.eta(k), pm);
  }
  vt.D = d_hat(bs, P, n, pp);
  vt.E = d_hat(bs, M, n, pm);
  if (lv.direct) {
    for (int k = 1; k <= n; ++k) {
      const int et = bs.eta(k);
      const double wk = w(et);
      const Vec &h1 = P.h[static_cast<size_t>(k)], &d1 = P.d[static_cast<size_t>(k)];
      const Vec &h0 = M.h[static_cast<size_t>(k)], &d0 = M.d[static_cast<size_t>(k)];
      vt.C += qf(h1, h0, -6 / (wk * pw(pp, et) * pw(pm, et)), 0) + qf(h1, d0, -2 / (wk * pw(pp, et) * pm), 0) +
              qf(d1, h0, -2 / (wk * pp * pw(pm, et)), 0) + qf(d1, d0, -2 / (0.5 * pp * pm), 0) +
              sq_i_hat(P, k, et, pp) + sq_i_hat(M, k, et, pm);
    }
    for (int k = 1; k <= n - 1; ++k) {
      const int e0 = bs.eta(k), e1 = bs.eta(k + 1);
      const double wk = pw(2, -e0 - 1);
      vt.F += 2 * (qf(P.h[static_cast<size_t>(k)], M.h[static_cast<size_t>(k) + 1], -1 / (wk * pw(pp, e0) * pw(pm, e1)), 0) +
                   qf(P.d[static_cast<size_t>(k)], M.h[static_cast<size_t>(k) + 1], -1 / (0.25 * pp * pm * pm), 0));
      vt.F += sq_i_hat(P, k, e0, pp);
      vt.G += 2 * (qf(M.h[static_cast<size_t>(k)], P.h[static_cast<size_t>(k) + 1], -1 / (wk * pw(pp, e1) * pw(pm, e0)), 0) +
                   qf(M.d[static_cast<size_t>(k)], P.h[static_cast<size_t>(k) + 1], -1 / (0.25 * pp * pp * pm), 0));
      vt.G += sq_i_hat(M, k, e0, pm);
    }
    for (int k = 2; k <= n; ++k) {
      vt.F += head_hat(M, k, bs.eta(k), pm, false);
      vt.G += head_hat(P, k, bs.eta(k), pp, false);
    }
  } else {
    for (int k = 1; k <= n; ++k) vt.C += sq_j_hat(P, k, bs.eta(k), pp) + sq_j_hat(M, k, bs.eta(k), pm);
    for (int k = 1; k <= n - 1; ++k) {
      vt.F += sq_j_hat(P, k, bs.eta(k), pp);
      vt.G += sq_j_hat(M, k, bs.eta(k), pm);
    }
    for (int k = 2; k <= n; ++k) {
      vt.F += head_hat(M, k, bs.eta(k), pm, true);
      // head indicator here, not the tail one
      vt.G += head_hat(P, k, bs.eta(k), pp, true);
    }
  }
  return vt;
}

double exact_variance(const BlockStructure& bs, const CellTable& cells, const VarianceParams& vp, Estimand e) {
  return exact_variance_terms(bs, block_decompose(bs, cells), vp, e).total();
}

double variance_upper_bound(const BlockStructure& bs, const CellTable& cells, const VarianceParams& vp, Estimand e) {
  return upper_bound_terms(bs, block_decompose(bs, cells), vp, e).total();
}

double conservative_variance_estimate(const BlockStructure& bs, const Trajectory& tr, const VarianceParams& vp, Estimand e) {
  return estimator_terms(bs, block_decompose(bs, tr, vp.q1, vp.q2), vp, e).total();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double u) {
  if (!(u > 0 && u < 1)) {
    if (u == 0) return -std::numeric_limits<double>::infinity();
    if (u == 1) return std::numeric_limits<double>::infinity();
    fail("invalid_probability", "quantile level must lie in [0, 1]");
  }
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double lo = 0.02425, hi = 1 - lo;
  double x;
  if (u < lo) {
    const double q = std::sqrt(-2 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (u <= hi) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // two Halley steps against erfc
  for (int it = 0; it < 2; ++it) {
    const double e = normal_cdf(x) - u;
    const double g = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    x = x - g / (1 + x * g / 2);
  }
  return x;
}

std::pair<double, double> confidence_interval(double point, double var_est, double alpha) {
  if (!(alpha > 0 && alpha < 1)) fail("invalid_alpha", "alpha must lie in (0, 1)");
  const double half = normal_quantile(1 - alpha / 2) * std::sqrt(std::max(0.0, var_est));
  return {point - half, point + half};
}

double multicenter_variance(const std::vector<double>& v, const std::vector<double>& w) {
  if (v.size() != w.size()) fail("length_mismatch", "variance and weight lists differ in length");
  double s = 0;
  for (size_t g = 0; g < v.size(); ++g) s += w[g] * w[g] * v[g];
  return s;
}

OrderTestResult order_wald_test(const std::array<double, 4>& e1, const std::array<double, 4>& e2,
                                const std::array<double, 4>& v1, const std::array<double, 4>& v2, double alpha) {
  if (!(alpha > 0 && alpha < 1)) fail("invalid_alpha", "alpha must lie in (0, 1)");
  OrderTestResult r;
  r.alpha = alpha;
  r.critical = normal_quantile(1 - alpha / 2);
  for (size_t k = 0; k < 4; ++k) {
    const double v = std::max(0.0, v1[k]) + std::max(0.0, v2[k]);
    if (!(v > 0)) fail("zero_variance", "order test needs a positive combined variance for " + to_string(static_cast<Estimand>(k)));
    r.statistic[k] = (e1[k] - e2[k]) / std::sqrt(v);
    r.p_value[k] = 2 * (1 - normal_cdf(std::abs(r.statistic[k])));
    r.reject[k] = std::abs(r.statistic[k]) > r.critical;
    r.overall_reject = r.overall_reject || r.reject[k];
  }
  return r;
}

}  // namespace mmd
