#pragma once

#include <array>
#include <vector>

namespace mmd {

// Constant-path potential outcomes Y_{i,t}(q 1, z 1), one value per (unit, time, cell).
// Cells: 0 = (q1, z=1), 1 = (q1, z=0), 2 = (q2, z=1), 3 = (q2, z=0).
inline constexpr int cell_index(int qi, int z) { return qi * 2 + (1 - z); }
inline constexpr int cell_q(int c) { return c / 2; }
inline constexpr int cell_z(int c) { return 1 - c % 2; }

struct CellTable {
  int N = 0;
  int T = 0;
  std::vector<double> values;

  CellTable() = default;
  CellTable(int n, int t) : N(n), T(t), values(static_cast<size_t>(n) * t * 4, 0.0) {}

  static CellTable constant(int n, int t, const std::array<double, 4>& cells) {
    CellTable tab(n, t);
    for (size_t k = 0; k < tab.values.size(); ++k) tab.values[k] = cells[k % 4];
    return tab;
  }

  // i is 0-based, t is 1-based
  double& at(int i, int t, int c) { return values[idx(i, t, c)]; }
  double at(int i, int t, int c) const { return values[idx(i, t, c)]; }

 private:
  size_t idx(int i, int t, int c) const {
    return (static_cast<size_t>(i) * T + static_cast<size_t>(t - 1)) * 4 + static_cast<size_t>(c);
  }
};

// Finite-population estimands over t in [p+1, T] implied by a cell table.
// Order: direct q1, direct q2, spillover z=1, spillover z=0.
std::array<double, 4> cell_estimands(const CellTable& cells, int p);

}  // namespace mmd
