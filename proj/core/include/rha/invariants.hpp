#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rha::check {

struct InvariantResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // observed error or statistic
  double tolerance = 0.0;
  std::string detail;
};

// Fast self-checks of the model and solver identities on seeded random
// instances. Used by `rha validate`.
std::vector<InvariantResult> run_invariants(std::uint64_t seed);

}  // namespace rha::check
