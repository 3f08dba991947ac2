#include "mmd/cells.hpp"

#include "mmd/error.hpp"

namespace mmd {

std::array<double, 4> cell_estimands(const CellTable& cells, int p) {
  if (p < 0 || p >= cells.T) fail("invalid_order", "p must lie in [0, T-1]");
  std::array<double, 4> s{0, 0, 0, 0};
  for (int i = 0; i < cells.N; ++i)
    for (int t = p + 1; t <= cells.T; ++t) {
      s[0] += cells.at(i, t, 0) - cells.at(i, t, 1);
      s[1] += cells.at(i, t, 2) - cells.at(i, t, 3);
      s[2] += cells.at(i, t, 0) - cells.at(i, t, 2);
      s[3] += cells.at(i, t, 1) - cells.at(i, t, 3);
    }
  const double scale = 1.0 / (static_cast<double>(cells.N) * (cells.T - p));
  for (double& v : s) v *= scale;
  return s;
}

}  // namespace mmd
