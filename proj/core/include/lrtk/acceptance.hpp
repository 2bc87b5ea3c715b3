#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace lrtk {

// Built-in verification suite: nine numbered checks covering the
// multiplier/kernel/composition agreement, the adjoint identity, the
// parametrix, smoothing orders, time-like invisibility, leading-order
// cancellation of light-like singularities, geodesic fidelity, conjugate
// detection, and the transform's Sobolev-type gain.
//
// Full scale pins every threshold as stated; the reduced scales used by
// the CLI selftest shrink the grids and widen the discretization-limited
// tolerances by the stated budget factor (exact identities keep their
// thresholds at every scale).

enum class AcceptanceScale { Full, Reduced, Tiny };

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::vector<std::string> details;
};

struct AcceptanceOptions {
  AcceptanceScale scale = AcceptanceScale::Full;
  int only = 0;  // 0 = run all nine
  int threads = 1;
  std::uint64_t seed = 20240817ull;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& log);

bool acceptance_passed(const std::vector<CriterionResult>& results);

} // namespace lrtk
