#pragma once

#include <vector>

#include "lineba/solver.h"

namespace lineba::detail {

struct PriorEval {
  VecX residual;
  std::vector<MatX> jacobians;  // one (rows x 6) block per prior frame
  double cost = 0.0;
};

// Cost and Jacobians of the marginal prior at the current poses.
PriorEval evaluate_prior(const MarginalPrior& prior, const SlidingWindowState& state,
                         bool with_jacobians);

}  // namespace lineba::detail
