#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tcil {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Self-check of the training invariants on a small synthetic problem:
// gradients against finite differences, freeze and gate masks,
// block-diagonal orthogonal gating, ancestor sums, split disjointness.
std::vector<CheckResult> run_verification(std::uint64_t seed = 0);

}  // namespace tcil
