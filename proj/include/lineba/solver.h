#pragma once

#include <string>
#include <vector>

#include "lineba/initialization.h"
#include "lineba/window_state.h"

namespace lineba {

struct SolverConfig {
  int max_iterations = 50;
  double lm_initial_damping = 1e-4;
  double lm_damping_up = 10.0;
  double lm_damping_down = 10.0;
  double lm_min_damping = 1e-12;
  double lm_max_damping = 1e8;
  double convergence_tol_cost = 1e-12;  // relative cost decrease
  double convergence_tol_step = 1e-10;  // increment norm
  double cauchy_scale = 1.0;
  bool robust_loss = true;
  bool two_step_enabled = false;
  int two_step_max_outer = 200;
  int line_fit_max_iterations = 10;
  // Two-step pose step: solve the pose system with the line blocks
  // eliminated (lines stay fixed; only the step direction sees them).
  bool two_step_reduced_pose_step = true;
  bool optimize_extrinsic = false;
  // Projected (l1, l2) norm, relative to |l|, below which a line factor is
  // skipped for the current evaluation.
  double degenerate_line_threshold = 1e-8;
  InitOptions init;

  // Throws kConfig on non-positive values or tolerances >= 1.
  void validate() const;
};

struct TotalCost {
  double total = 0.0;
  double prior = 0.0;
  double odometry = 0.0;
  double point = 0.0;
  double line = 0.0;
  int deactivated_line_factors = 0;
};

TotalCost evaluate_cost(const FactorGraph& graph, const SlidingWindowState& state,
                        const SolverConfig& config);

// Which parameter blocks are free in a solve.
struct StateLayout {
  std::map<FrameId, int> pose_offset;  // frozen poses are absent
  int extrinsic_offset = -1;
  std::map<FeatureId, int> point_offset;
  std::map<FeatureId, int> line_offset;
  int line_dof = 0;
  int dimension = 0;

  int pose_columns() const { return 6 * static_cast<int>(pose_offset.size()); }
  int line_columns() const { return line_dof * static_cast<int>(line_offset.size()); }
};

// Poses: all but the first keyframe when no prior fixes the gauge. Features
// only when at least one non-anchor factor constrains them (for the
// orthonormal baseline a line needs observations in two frames). Lines are
// left out when include_lines is false.
StateLayout make_layout(const FactorGraph& graph, const SlidingWindowState& state,
                        const SolverConfig& config, bool include_lines = true);

struct NormalEquations {
  MatX H;
  VecX b;
  TotalCost cost;
  StateLayout layout;
};

// H = sum rho' J^T W J, b = -sum rho' J^T W r, over the free blocks of layout.
NormalEquations build_normal_equations(const FactorGraph& graph, const SlidingWindowState& state,
                                       const SolverConfig& config, const StateLayout& layout);
NormalEquations build_normal_equations(const FactorGraph& graph, const SlidingWindowState& state,
                                       const SolverConfig& config);

// X <- X (+) dx. Inverse depths are clamped from below at min_inverse_depth.
// Returns false (leaving out untouched) for a malformed or non-finite dx.
bool apply_increment(const SlidingWindowState& state, const StateLayout& layout, const VecX& dx,
                     SlidingWindowState& out, double min_inverse_depth = 1e-4);

enum class SolveStatus { kConverged, kMaxIterations, kDiverged };
const char* to_string(SolveStatus status);

struct IterationRecord {
  int iteration = 0;
  double cost_before = 0.0;     // r_k
  double cost_after_fit = 0.0;  // r_{k+1}^[1]; equals cost_before for joint LM
  double cost = 0.0;            // r_{k+1}
  double damping = 0.0;
  int attempts = 0;
  bool accepted = false;
  double step_norm = 0.0;
  int dimension = 0;
  double line_fit_seconds = 0.0;
  double step_seconds = 0.0;
};

struct ConvergenceReport {
  SolveStatus status = SolveStatus::kConverged;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  TotalCost final_breakdown;
  std::vector<IterationRecord> iterations;
  int normal_equation_dimension = 0;
  int line_parameter_count = 0;  // per line
  double total_seconds = 0.0;

  double mean_iteration_seconds() const;
};

struct SolveResult {
  SlidingWindowState state;
  ConvergenceReport report;
};

SolveResult lm_solve(const FactorGraph& graph, const SlidingWindowState& state,
                     const SolverConfig& config);

// Alternates a per-line refit at fixed poses with one LM step over the
// remaining blocks with lines fixed.
SolveResult two_step_solve(const FactorGraph& graph, const SlidingWindowState& state,
                           const SolverConfig& config);

// Dispatches on config.two_step_enabled.
SolveResult solve(const FactorGraph& graph, const SlidingWindowState& state,
                  const SolverConfig& config);

// Step 1 of the two-step scheme: plane-distance least squares candidate per
// line, refined on the line reprojection cost; a line only moves when its
// cost does not increase.
SlidingWindowState refit_lines(const FactorGraph& graph, const SlidingWindowState& state,
                               const SolverConfig& config);

}  // namespace lineba
