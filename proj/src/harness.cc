#include "lineba/harness.h"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>

namespace lineba {

namespace {

// splitmix64 finalizer; decorrelates streams derived from nearby seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunSeeds derive_seeds(std::uint64_t seed) {
  return {seed, mix(seed ^ 0x6e6f697365ULL), mix(seed ^ 0x7065727475ULL)};
}

PreparedProblem prepare_problem(const SyntheticWorld& world, const ObservationSet& obs,
                                const RunConfig& config, LineRepresentation representation,
                                std::uint64_t perturbation_seed) {
  WindowProblem problem = make_window_problem(world, obs, representation);
  PreparedProblem out;
  out.graph = std::move(problem.graph);
  out.ground_truth = std::move(problem.ground_truth);
  if (representation == LineRepresentation::kPointOnly) {
    out.graph.lines.clear();
    out.ground_truth.lines.clear();
  }
  if (config.initial_poses == InitialPoses::kPerturbedTruth) {
    out.initial = perturb_state(out.ground_truth, config.perturbation, perturbation_seed);
    out.removed_features = prune_unconstrained_features(out.graph, out.initial);
  } else {
    out.initial = out.ground_truth;
    const std::vector<CameraPose> chained = chain_odometry(obs);
    for (std::size_t k = 0; k < out.initial.keyframes.size() && k < chained.size(); ++k) {
      out.initial.keyframes[k].pose = chained[k];
    }
    out.removed_features = initialize_features(out.graph, out.initial, config.features);
  }
  // The ground-truth window keeps exactly the features that survived.
  std::erase_if(out.ground_truth.points,
                [&](const auto& kv) { return !out.initial.points.contains(kv.first); });
  std::erase_if(out.ground_truth.lines,
                [&](const auto& kv) { return !out.initial.lines.contains(kv.first); });
  return out;
}

RunReport run_on_observations(const SyntheticWorld& world, const ObservationSet& obs,
                              const RunConfig& config, LineRepresentation representation,
                              SolverKind solver, std::uint64_t seed) {
  const RunSeeds seeds = derive_seeds(seed);
  const PreparedProblem problem =
      prepare_problem(world, obs, config, representation, seeds.perturbation);

  SolverConfig solver_config = config.solver;
  solver_config.two_step_enabled = solver == SolverKind::kTwoStep;
  const SolveResult result = solve(problem.graph, problem.initial, solver_config);

  RunReport report;
  report.config_snapshot = to_config_text(config);
  report.representation = representation;
  report.solver = solver;
  report.seed = seed;
  report.status = result.report.status;
  report.initial_cost = result.report.initial_cost;
  report.final_cost = result.report.final_cost;
  report.iterations = result.report.iterations;
  report.solve_seconds = result.report.total_seconds;
  for (const auto& it : result.report.iterations) {
    report.line_fit_seconds += it.line_fit_seconds;
    report.pose_step_seconds += it.step_seconds;
  }
  report.mean_iteration_seconds = result.report.mean_iteration_seconds();
  report.line_parameter_count = result.report.line_parameter_count;
  report.normal_equation_dimension = result.report.normal_equation_dimension;
  report.n_keyframes = static_cast<int>(result.state.keyframes.size());
  report.n_points = static_cast<int>(result.state.points.size());
  report.n_lines = static_cast<int>(result.state.lines.size());

  std::vector<CameraPose> estimate;
  std::vector<CameraPose> truth;
  for (const auto& kf : result.state.keyframes) {
    estimate.push_back(kf.pose);
    truth.push_back(world.poses.at(static_cast<std::size_t>(kf.id)));
  }
  report.estimate = Trajectory::from_poses(estimate);
  report.truth = Trajectory::from_poses(truth);
  report.ate_rmse = ate_rmse(report.estimate, report.truth, true);
  report.rpe_delta = config.rpe_delta;
  if (static_cast<int>(estimate.size()) > config.rpe_delta) {
    const RpeResult r = rpe(report.estimate, report.truth, config.rpe_delta);
    report.rpe_translation_rmse = r.translation_rmse;
    report.rpe_rotation_rmse = r.rotation_rmse;
  }
  return report;
}

RunReport run_cell(const RunConfig& config, LineRepresentation representation, SolverKind solver,
                   std::uint64_t seed) {
  const RunSeeds seeds = derive_seeds(seed);
  const SyntheticWorld world = generate_world(config.scene, config.trajectory, seeds.world);
  NoiseConfig noise = config.noise;
  noise.seed = seeds.noise;
  const ObservationSet obs = observe(world, noise);
  return run_on_observations(world, obs, config, representation, solver, seed);
}

std::vector<RunReport> run_benchmark(const RunConfig& config) {
  config.validate();
  const std::size_t per_seed = config.representations.size() * config.solvers.size();
  const std::size_t n_seeds = static_cast<std::size_t>(config.n_seeds);
  std::vector<RunReport> reports(per_seed * n_seeds);

  const auto run_seed = [&](std::size_t s) {
    const std::uint64_t seed = config.seed + s;
    const RunSeeds seeds = derive_seeds(seed);
    const SyntheticWorld world = generate_world(config.scene, config.trajectory, seeds.world);
    NoiseConfig noise = config.noise;
    noise.seed = seeds.noise;
    const ObservationSet obs = observe(world, noise);
    std::size_t slot = s * per_seed;
    for (LineRepresentation rep : config.representations) {
      for (SolverKind solver : config.solvers) {
        reports[slot++] = run_on_observations(world, obs, config, rep, solver, seed);
      }
    }
  };

  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_seeds));
  if (threads <= 1) {
    for (std::size_t s = 0; s < n_seeds; ++s) run_seed(s);
    return reports;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t s = next++; s < n_seeds; s = next++) {
        try {
          run_seed(s);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
  return reports;
}

std::vector<SummaryRow> summarize(const std::vector<RunReport>& reports) {
  std::vector<SummaryRow> rows;
  for (const RunReport& r : reports) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& row) {
      return row.representation == r.representation && row.solver == r.solver;
    });
    if (it == rows.end()) {
      SummaryRow row;
      row.representation = r.representation;
      row.solver = r.solver;
      row.line_parameter_count = r.line_parameter_count;
      row.normal_equation_dimension = r.normal_equation_dimension;
      rows.push_back(row);
      it = rows.end() - 1;
    }
    ++it->runs;
  }
  for (SummaryRow& row : rows) {
    std::vector<double> ate;
    std::vector<double> rpe_t;
    std::vector<double> rpe_r;
    double iter_seconds = 0.0;
    double iterations = 0.0;
    for (const RunReport& r : reports) {
      if (r.representation != row.representation || r.solver != row.solver) continue;
      if (r.status == SolveStatus::kDiverged) ++row.diverged;
      ate.push_back(r.ate_rmse);
      rpe_t.push_back(r.rpe_translation_rmse);
      rpe_r.push_back(r.rpe_rotation_rmse);
      iter_seconds += r.mean_iteration_seconds;
      iterations += static_cast<double>(r.iterations.size());
    }
    const double n = static_cast<double>(row.runs);
    row.median_ate = median(ate);
    row.mean_ate = std::accumulate(ate.begin(), ate.end(), 0.0) / n;
    row.median_rpe_translation = median(rpe_t);
    row.median_rpe_rotation = median(rpe_r);
    row.mean_iteration_ms = 1e3 * iter_seconds / n;
    row.mean_iterations = iterations / n;
  }
  return rows;
}

}  // namespace lineba
