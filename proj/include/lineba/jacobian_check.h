#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lineba/types.h"

namespace lineba {

struct JacobianBlockCheck {
  std::string name;
  int configurations = 0;
  // max over configurations of |J_analytic - J_fd|_F / max(|J_fd|_F, 1e-8)
  double max_relative_error = 0.0;
};

struct JacobianCheckOptions {
  int configurations = 500;
  std::uint64_t seed = 1;
  double step = 1e-6;  // central differences
};

// Compares every analytic Jacobian block of the line, point and odometry
// factors (and the line geometry derivatives they are built from) with
// central finite differences over random, well-posed configurations.
std::vector<JacobianBlockCheck> run_jacobian_checks(const JacobianCheckOptions& options = {});

}  // namespace lineba
