#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mmd {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0;
  int cases = 0;
  std::string detail;
};

// Enumeration cross-checks on tiny instances. Random tables come from seed.
std::vector<CheckResult> run_oracle_suite(std::uint64_t seed,
                                          const std::function<void(const CheckResult&)>& on_done = {});

}  // namespace mmd
