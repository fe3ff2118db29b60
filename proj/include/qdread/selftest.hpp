#pragma once

// Built-in oracle suite run by `qdread selftest`.

#include <string>
#include <vector>

namespace qdread {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Breit-Wigner closed form, 3x3 Green's-function equivalence,
/// delta_broadening halving, and Kirchhoff residuals of series solutions.
std::vector<SelftestCheck> run_selftest();

}  // namespace qdread
