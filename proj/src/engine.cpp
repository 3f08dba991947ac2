#include "mmd/engine.hpp"

#include <cmath>

#include "mmd/error.hpp"

namespace mmd {

void AssignmentPolicy::validate() const {
  if (!(q1 > 0 && q1 < 1)) fail("invalid_q1", "q1 must lie in (0, 1)");
  if (!(q2 > 0 && q2 < 1)) fail("invalid_q2", "q2 must lie in (0, 1)");
  if (!(r1 >= 0 && r1 <= 1)) fail("invalid_r", "r_q1 must lie in [0, 1]");
  if (design.T < 1 || design.points.empty()) fail("invalid_design", "policy needs a design");
}

Model2Spec Model2Spec::with_order(int m, double delta) {
  Model2Spec s;
  s.m = m;
  const auto n = static_cast<size_t>(m) + 1;
  s.delta_q.assign(n, delta);
  s.delta_z.assign(n, delta);
  s.delta_qz.assign(n, delta);
  return s;
}

void Model2Spec::validate() const {
  if (m < 0) fail("invalid_model", "model order m must be >= 0");
  const auto n = static_cast<size_t>(m) + 1;
  if (delta_q.size() != n || delta_z.size() != n || delta_qz.size() != n)
    fail("invalid_model", "delta_q, delta_z and delta_qz must each have m+1 entries");
  if (noise_sd < 0) fail("invalid_model", "noise_sd must be >= 0");
}

Model2::Model2(Model2Spec spec, int N, int T, double q1, std::uint64_t noise_seed)
    : spec_(std::move(spec)), N_(N), T_(T), q1_(q1) {
  spec_.validate();
  if (!spec_.alpha.empty() && static_cast<int>(spec_.alpha.size()) != T)
    fail("invalid_model", "alpha must have T entries");
  base_.resize(static_cast<size_t>(N) * T);
  Rng rng(noise_seed);
  for (int i = 0; i < N; ++i)
    for (int t = 1; t <= T; ++t) {
      const double a = spec_.alpha.empty() ? std::log(static_cast<double>(t))
                                           : spec_.alpha[static_cast<size_t>(t - 1)];
      base_[static_cast<size_t>(i) * T + static_cast<size_t>(t - 1)] = a + spec_.noise_sd * rng.normal();
    }
}

double Model2::eval(int i, int t, std::span<const double> q, std::span<const std::uint8_t> z) const {
  double y = base_[static_cast<size_t>(i) * T_ + static_cast<size_t>(t - 1)];
  const size_t n = q.size();
  // lag d reads path entry n-1-d; entries before time 1 are absent
  for (size_t d = 0; d < n && d <= static_cast<size_t>(spec_.m); ++d) {
    const bool hq = q[n - 1 - d] == q1_;
    const bool hz = z[n - 1 - d] != 0;
    if (hq) y += spec_.delta_q[d];
    if (hz) y += spec_.delta_z[d];
    if (hq && hz) y += spec_.delta_qz[d];
  }
  return y;
}

PathTableModel::PathTableModel(int N, int T, int m, double q1, double B, std::uint64_t seed)
    : N_(N), T_(T), m_(m), q1_(q1) {
  if (m < 0 || m > 8) fail("invalid_model", "path table order must lie in [0, 8]");
  per_t_ = size_t{1} << (2 * (m + 1));
  values_.resize(static_cast<size_t>(N) * T * per_t_);
  Rng rng(seed);
  for (double& v : values_) v = B * (2 * rng.uniform() - 1);
}

size_t PathTableModel::key(int i, int t, std::span<const double> q, std::span<const std::uint8_t> z) const {
  size_t code = 0;
  // missing pre-series entries encode as (q1, 0)
  const size_t n = q.size();
  for (size_t d = 0; d <= static_cast<size_t>(m_); ++d) {
    size_t c = 0;
    if (d < n) c = static_cast<size_t>(cell_index(q[n - 1 - d] == q1_ ? 0 : 1, z[n - 1 - d]));
    else c = static_cast<size_t>(cell_index(0, 0));
    code = code * 4 + c;
  }
  return (static_cast<size_t>(i) * T_ + static_cast<size_t>(t - 1)) * per_t_ + code;
}

double PathTableModel::eval(int i, int t, std::span<const double> q, std::span<const std::uint8_t> z) const {
  return values_[key(i, t, q, z)];
}

void PathTableModel::set_cells(const CellTable& cells) {
  if (cells.N != N_ || cells.T != T_) fail("invalid_model", "cell table shape mismatch");
  std::vector<double> qp(static_cast<size_t>(m_) + 1);
  std::vector<std::uint8_t> zp(static_cast<size_t>(m_) + 1);
  const double qv[2] = {q1_, -1.0};  // anything other than q1 reads as q2
  for (int i = 0; i < N_; ++i)
    for (int t = 1; t <= T_; ++t) {
      const size_t len = static_cast<size_t>(std::min(t, m_ + 1));
      for (int c = 0; c < 4; ++c) {
        std::fill_n(qp.begin(), len, qv[cell_q(c)]);
        std::fill_n(zp.begin(), len, static_cast<std::uint8_t>(cell_z(c)));
        values_[key(i, t, std::span<const double>(qp.data(), len), std::span<const std::uint8_t>(zp.data(), len))] =
            cells.at(i, t, c);
      }
    }
}

CellTable potential_cells(const OutcomeModel& model, int N, int T, double q1, double q2) {
  CellTable tab(N, T);
  const int m = model.order();
  std::vector<double> qp(static_cast<size_t>(m) + 1);
  std::vector<std::uint8_t> zp(static_cast<size_t>(m) + 1);
  const double qv[2] = {q1, q2};
  for (int i = 0; i < N; ++i)
    for (int t = 1; t <= T; ++t) {
      const size_t len = static_cast<size_t>(std::min(t, m + 1));
      for (int c = 0; c < 4; ++c) {
        std::fill_n(qp.begin(), len, qv[cell_q(c)]);
        std::fill_n(zp.begin(), len, static_cast<std::uint8_t>(cell_z(c)));
        tab.at(i, t, c) = model.eval(i, t, std::span<const double>(qp.data(), len),
                                     std::span<const std::uint8_t>(zp.data(), len));
      }
    }
  return tab;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return splitmix(splitmix(splitmix(master) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

Trajectory draw_assignment(const AssignmentPolicy& policy, int N, std::uint64_t seed) {
  policy.validate();
  if (N < 1) fail("invalid_N", "N must be >= 1");
  const Design& d = policy.design;
  Trajectory tr(N, d.T);
  Rng rng(seed);
  std::vector<std::uint8_t> zcol(static_cast<size_t>(N));
  for (int l = 0; l <= d.L(); ++l) {
    const double q = rng.bernoulli(policy.r1) ? policy.q1 : policy.q2;
    for (int i = 0; i < N; ++i) zcol[static_cast<size_t>(i)] = rng.bernoulli(q) ? 1 : 0;
    for (int t = d.point(l); t < d.point(l + 1); ++t) {
      tr.Q[static_cast<size_t>(t - 1)] = q;
      for (int i = 0; i < N; ++i) tr.z(i, t) = zcol[static_cast<size_t>(i)];
    }
  }
  return tr;
}

void realize_outcomes(const OutcomeModel& model, Trajectory& tr) {
  const int m = model.order();
  std::vector<std::uint8_t> zp(static_cast<size_t>(m) + 1);
  for (int i = 0; i < tr.N; ++i)
    for (int t = 1; t <= tr.T; ++t) {
      const int len = std::min(t, m + 1);
      const int start = t - len + 1;
      for (int k = 0; k < len; ++k) zp[static_cast<size_t>(k)] = tr.z(i, start + k);
      tr.y(i, t) = model.eval(i, t, std::span<const double>(tr.Q.data() + (start - 1), static_cast<size_t>(len)),
                              std::span<const std::uint8_t>(zp.data(), static_cast<size_t>(len)));
    }
}

Trajectory run_trial(const AssignmentPolicy& policy, const OutcomeModel& model, int N, std::uint64_t seed) {
  Trajectory tr = draw_assignment(policy, N, seed);
  realize_outcomes(model, tr);
  return tr;
}

std::vector<Trajectory> run_multicenter(const std::vector<CenterSpec>& specs, std::uint64_t seed) {
  if (specs.empty()) fail("invalid_centers", "at least one center is required");
  std::vector<Trajectory> out;
  out.reserve(specs.size());
  for (size_t g = 0; g < specs.size(); ++g) {
    if (!specs[g].model) fail("invalid_centers", "center '" + specs[g].label + "' has no outcome model");
    // center 0 keeps the master seed so a single center matches run_trial
    const std::uint64_t s = g == 0 ? seed : derive_seed(seed, g);
    out.push_back(run_trial(specs[g].policy, *specs[g].model, specs[g].N, s));
  }
  return out;
}

std::vector<double> center_weights(const std::vector<CenterSpec>& specs) {
  double total = 0;
  for (const auto& s : specs) total += s.N;
  std::vector<double> w;
  for (const auto& s : specs) w.push_back(s.N / total);
  return w;
}

}  // namespace mmd
