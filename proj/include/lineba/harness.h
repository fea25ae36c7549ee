#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lineba/config.h"
#include "lineba/metrics.h"

namespace lineba {

// Seeds for the independent random streams of one run.
struct RunSeeds {
  std::uint64_t world = 0;
  std::uint64_t noise = 0;
  std::uint64_t perturbation = 0;
};
RunSeeds derive_seeds(std::uint64_t seed);

struct PreparedProblem {
  FactorGraph graph;
  SlidingWindowState ground_truth;
  SlidingWindowState initial;
  int removed_features = 0;
};

// Window, graph and starting state for one representation. Point-only runs
// carry no line factors at all.
PreparedProblem prepare_problem(const SyntheticWorld& world, const ObservationSet& obs,
                                const RunConfig& config, LineRepresentation representation,
                                std::uint64_t perturbation_seed);

struct RunReport {
  std::string config_snapshot;
  LineRepresentation representation = LineRepresentation::kInverseDepth;
  SolverKind solver = SolverKind::kJoint;
  std::uint64_t seed = 0;
  SolveStatus status = SolveStatus::kConverged;
  double ate_rmse = 0.0;
  double rpe_translation_rmse = 0.0;
  double rpe_rotation_rmse = 0.0;
  int rpe_delta = 1;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<IterationRecord> iterations;
  double solve_seconds = 0.0;
  double line_fit_seconds = 0.0;
  double pose_step_seconds = 0.0;
  double mean_iteration_seconds = 0.0;
  int line_parameter_count = 0;
  int normal_equation_dimension = 0;
  int n_keyframes = 0;
  int n_points = 0;
  int n_lines = 0;
  Trajectory estimate;
  Trajectory truth;
};

RunReport run_on_observations(const SyntheticWorld& world, const ObservationSet& obs,
                              const RunConfig& config, LineRepresentation representation,
                              SolverKind solver, std::uint64_t seed);

// Generates the world and observations of `seed` and runs one cell.
RunReport run_cell(const RunConfig& config, LineRepresentation representation, SolverKind solver,
                   std::uint64_t seed);

// Full matrix representations x solvers x seeds, ordered seed-major. Seeds
// run on worker threads; the result does not depend on the thread count.
std::vector<RunReport> run_benchmark(const RunConfig& config);

struct SummaryRow {
  LineRepresentation representation = LineRepresentation::kInverseDepth;
  SolverKind solver = SolverKind::kJoint;
  int runs = 0;
  int diverged = 0;
  double median_ate = 0.0;
  double mean_ate = 0.0;
  double median_rpe_translation = 0.0;
  double median_rpe_rotation = 0.0;
  double mean_iteration_ms = 0.0;
  double mean_iterations = 0.0;
  int line_parameter_count = 0;
  int normal_equation_dimension = 0;  // of the first run
};

std::vector<SummaryRow> summarize(const std::vector<RunReport>& reports);

}  // namespace lineba
