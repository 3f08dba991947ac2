#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmd/cells.hpp"
#include "mmd/design.hpp"

namespace mmd {

struct AssignmentPolicy {
  Design design;
  double q1 = 0.6;
  double q2 = 0.4;
  double r1 = 0.5;

  void validate() const;
};

struct Trajectory {
  int N = 0;
  int T = 0;
  std::vector<double> Q;        // Q[t-1]
  std::vector<std::uint8_t> Z;  // row-major N x T
  std::vector<double> Y;        // row-major N x T

  Trajectory() = default;
  Trajectory(int n, int t)
      : N(n), T(t), Q(static_cast<size_t>(t), 0.0), Z(static_cast<size_t>(n) * t, 0),
        Y(static_cast<size_t>(n) * t, 0.0) {}

  double q(int t) const { return Q[static_cast<size_t>(t - 1)]; }
  std::uint8_t z(int i, int t) const { return Z[idx(i, t)]; }
  double y(int i, int t) const { return Y[idx(i, t)]; }
  std::uint8_t& z(int i, int t) { return Z[idx(i, t)]; }
  double& y(int i, int t) { return Y[idx(i, t)]; }

  size_t idx(int i, int t) const { return static_cast<size_t>(i) * T + static_cast<size_t>(t - 1); }
};

// Potential outcome Y_{i,t}(Q path, Z path). Paths run oldest to newest and
// hold min(t, m+1) entries.
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;
  virtual int order() const = 0;
  virtual double eval(int i, int t, std::span<const double> q_path,
                      std::span<const std::uint8_t> z_path) const = 0;
  virtual std::string name() const = 0;
};

// Y = B when treated, -B otherwise.
class Model1 final : public OutcomeModel {
 public:
  explicit Model1(double B = 1.0) : B_(B) {}
  int order() const override { return 0; }
  double eval(int, int, std::span<const double>, std::span<const std::uint8_t> z) const override {
    return z.back() ? B_ : -B_;
  }
  std::string name() const override { return "model1"; }

 private:
  double B_;
};

struct Model2Spec {
  int m = 2;
  std::vector<double> delta_q{1, 1, 1};
  std::vector<double> delta_z{1, 1, 1};
  std::vector<double> delta_qz{1, 1, 1};
  double noise_sd = 1.0;
  std::vector<double> alpha;  // alpha[t-1]; empty means log t

  static Model2Spec with_order(int m, double delta = 1.0);
  void validate() const;
};

// Linear model with time effects and frozen unit-time noise.
class Model2 final : public OutcomeModel {
 public:
  Model2(Model2Spec spec, int N, int T, double q1, std::uint64_t noise_seed);
  int order() const override { return spec_.m; }
  double eval(int i, int t, std::span<const double> q_path,
              std::span<const std::uint8_t> z_path) const override;
  std::string name() const override { return "model2"; }
  const Model2Spec& spec() const { return spec_; }

 private:
  Model2Spec spec_;
  int N_, T_;
  double q1_;
  std::vector<double> base_;  // alpha_t + eps_{i,t}
};

// Arbitrary bounded outcomes for every (i, t, path) with path length m+1.
// Used by the enumeration checks.
class PathTableModel final : public OutcomeModel {
 public:
  PathTableModel(int N, int T, int m, double q1, double B, std::uint64_t seed);
  int order() const override { return m_; }
  double eval(int i, int t, std::span<const double> q_path,
              std::span<const std::uint8_t> z_path) const override;
  std::string name() const override { return "path_table"; }
  // Overwrites the constant-path entries with a given cell table.
  void set_cells(const CellTable& cells);

 private:
  size_t key(int i, int t, std::span<const double> q_path, std::span<const std::uint8_t> z_path) const;
  int N_, T_, m_;
  double q1_;
  size_t per_t_;
  std::vector<double> values_;
};

// Order-0 model reading a constant cell table at the current (Q_t, Z_it).
class CellModel final : public OutcomeModel {
 public:
  CellModel(CellTable cells, double q1) : cells_(std::move(cells)), q1_(q1) {}
  int order() const override { return 0; }
  double eval(int i, int t, std::span<const double> q, std::span<const std::uint8_t> z) const override {
    return cells_.at(i, t, cell_index(q.back() == q1_ ? 0 : 1, z.back()));
  }
  std::string name() const override { return "cells"; }

 private:
  CellTable cells_;
  double q1_;
};

// Y_{i,t}(q 1, z 1) for every cell.
CellTable potential_cells(const OutcomeModel& model, int N, int T, double q1, double q2);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() { return norm_(gen_); }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> norm_{0.0, 1.0};
};

Trajectory draw_assignment(const AssignmentPolicy& policy, int N, std::uint64_t seed);
void realize_outcomes(const OutcomeModel& model, Trajectory& traj);
Trajectory run_trial(const AssignmentPolicy& policy, const OutcomeModel& model, int N, std::uint64_t seed);

struct CenterSpec {
  std::string label;
  int N = 1;
  AssignmentPolicy policy;
  std::shared_ptr<const OutcomeModel> model;
};

std::vector<Trajectory> run_multicenter(const std::vector<CenterSpec>& specs, std::uint64_t seed);
std::vector<double> center_weights(const std::vector<CenterSpec>& specs);

}  // namespace mmd
