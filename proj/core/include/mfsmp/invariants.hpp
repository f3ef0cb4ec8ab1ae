#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfsmp/backward.hpp"
#include "mfsmp/policy.hpp"

namespace mfsmp {

struct InvariantCheck {
  std::string module;
  std::string name;
  bool passed = false;
  double margin = 0.0;  // distance to the bound; interpretation in `detail`
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantCheck> checks;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

/// Runs the runtime invariants of each module against one simulated ensemble
/// of the given model. `scope` filters by module name; empty means all.
InvariantReport run_invariant_suite(const CoefficientSet& model,
                                    const LinearFeaturePolicy& policy, const TimeGrid& grid,
                                    int particles, std::uint64_t seed,
                                    const std::vector<std::string>& scope = {});

}  // namespace mfsmp
