// lineba: synthetic line bundle adjustment runs from the command line.
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "lineba/io.h"
#include "lineba/jacobian_check.h"

namespace {

using namespace lineba;

constexpr int kExitOk = 0;
constexpr int kExitDiverged = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string representation;
  std::string solver;
  std::string out;
  std::string format = "table";
};

RunConfig load_run_config(const CommonOptions& opt) {
  RunConfig config = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
  if (opt.seed) config.seed = *opt.seed;
  if (!opt.representation.empty()) {
    const auto rep = parse_line_representation(opt.representation);
    if (!rep) throw Error(ErrorKind::kConfig, "unknown representation '" + opt.representation + "'");
    config.representations = {*rep};
  }
  if (!opt.solver.empty()) {
    const auto solver = parse_solver_kind(opt.solver);
    if (!solver) throw Error(ErrorKind::kConfig, "unknown solver '" + opt.solver + "'");
    config.solvers = {*solver};
  }
  config.validate();
  return config;
}

// Writes to the file at `path`, or to stdout when it is empty or "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write " + path);
  fn(out);
}

void print_run(std::ostream& out, const RunReport& r) {
  out << std::left << std::setw(12) << to_string(r.representation) << std::setw(10)
      << to_string(r.solver) << "seed " << r.seed << "  " << to_string(r.status) << '\n'
      << std::scientific << std::setprecision(4) << "  ATE RMSE      " << r.ate_rmse << '\n'
      << "  RPE trans     " << r.rpe_translation_rmse << "  (delta " << r.rpe_delta << ")\n"
      << "  RPE rot (rad) " << r.rpe_rotation_rmse << '\n'
      << "  cost          " << r.initial_cost << " -> " << r.final_cost << '\n'
      << std::fixed << std::setprecision(3) << "  iterations    " << r.iterations.size()
      << "  (" << 1e3 * r.mean_iteration_seconds << " ms each)\n"
      << "  features      " << r.n_points << " points, " << r.n_lines << " lines ("
      << r.line_parameter_count << " params each)\n"
      << "  solve dim     " << r.normal_equation_dimension << '\n';
}

int cmd_generate(const CommonOptions& opt) {
  RunConfig config = load_run_config(opt);
  const RunSeeds seeds = derive_seeds(config.seed);
  WorldFile file;
  file.world = generate_world(config.scene, config.trajectory, seeds.world);
  NoiseConfig noise = config.noise;
  noise.seed = seeds.noise;
  file.observations = observe(file.world, noise);
  if (opt.out.empty()) throw Error(ErrorKind::kConfig, "generate needs --out <path>");
  save_world(opt.out, file);
  std::size_t n_point_obs = 0;
  std::size_t n_line_obs = 0;
  for (const auto& f : file.observations.frames) {
    n_point_obs += f.points.size();
    n_line_obs += f.lines.size();
  }
  std::cerr << "wrote " << opt.out << ": " << file.world.poses.size() << " frames, "
            << n_point_obs << " point and " << n_line_obs << " line observations\n";
  return kExitOk;
}

int cmd_solve(const CommonOptions& opt, const std::string& world_path,
              const std::string& trajectory_path) {
  RunConfig config = load_run_config(opt);
  const WorldFile file = load_world(world_path);
  // The world file, not the config, describes what was generated.
  config.scene = file.world.scene;
  config.trajectory = file.world.trajectory;
  config.noise = file.observations.noise;
  std::vector<RunReport> reports;
  for (LineRepresentation rep : config.representations) {
    for (SolverKind solver : config.solvers) {
      reports.push_back(
          run_on_observations(file.world, file.observations, config, rep, solver, file.world.seed));
    }
  }
  with_output(opt.out, [&](std::ostream& out) {
    if (opt.format == "machine") {
      write_jsonl(out, reports);
    } else {
      for (const auto& r : reports) print_run(out, r);
    }
  });
  if (!trajectory_path.empty()) {
    std::ofstream out(trajectory_path);
    if (!out) throw Error(ErrorKind::kConfig, "cannot write " + trajectory_path);
    write_tum(out, reports.front().estimate);
  }
  for (const auto& r : reports) {
    if (r.status == SolveStatus::kDiverged) return kExitDiverged;
  }
  return kExitOk;
}

int cmd_benchmark(const CommonOptions& opt, const std::string& summary_path) {
  const RunConfig config = load_run_config(opt);
  const std::vector<RunReport> reports = run_benchmark(config);
  const std::vector<SummaryRow> rows = summarize(reports);
  if (!opt.out.empty()) with_output(opt.out, [&](std::ostream& out) { write_jsonl(out, reports); });
  if (!summary_path.empty()) {
    with_output(summary_path, [&](std::ostream& out) { write_summary_csv(out, rows); });
  }
  if (opt.format == "machine") {
    if (opt.out.empty()) write_jsonl(std::cout, reports);
  } else {
    write_summary_table(std::cout, rows);
  }
  for (const auto& r : rows) {
    if (r.diverged > 0) return kExitDiverged;
  }
  return kExitOk;
}

int cmd_check_jacobians(const CommonOptions& opt, int configurations, double tolerance) {
  JacobianCheckOptions options;
  options.configurations = configurations;
  if (opt.seed) options.seed = *opt.seed;
  const auto checks = run_jacobian_checks(options);
  bool ok = true;
  with_output(opt.out, [&](std::ostream& out) {
    for (const auto& c : checks) {
      const bool pass = c.max_relative_error < tolerance;
      ok = ok && pass;
      if (opt.format == "machine") {
        out << "{\"block\":\"" << c.name << "\",\"configurations\":" << c.configurations
            << ",\"max_relative_error\":" << std::setprecision(6) << c.max_relative_error
            << ",\"pass\":" << (pass ? "true" : "false") << "}\n";
      } else {
        out << (pass ? "ok   " : "FAIL ") << std::left << std::setw(34) << c.name
            << std::scientific << std::setprecision(3) << c.max_relative_error << "  ("
            << c.configurations << " configurations)\n";
      }
    }
  });
  return ok ? kExitOk : kExitDiverged;
}

int cmd_config(const CommonOptions& opt, bool keys) {
  if (keys) {
    for (const auto& k : config_keys()) {
      std::cout << std::left << std::setw(40) << k.name << k.description << '\n';
    }
    return kExitOk;
  }
  const RunConfig config = load_run_config(opt);
  with_output(opt.out, [&](std::ostream& out) { out << to_config_text(config); });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic point-line sliding-window bundle adjustment"};
  app.require_subcommand(1);
  CommonOptions opt;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", opt.seed, "Seed (overrides run.seed)");
    cmd->add_option("--config", opt.config_path, "Key-value config file");
    cmd->add_option("--representation", opt.representation, "inv-depth | orthonormal | point-only")
        ->check(CLI::IsMember({"inv-depth", "orthonormal", "point-only"}));
    cmd->add_option("--solver", opt.solver, "joint | two-step")
        ->check(CLI::IsMember({"joint", "two-step"}));
    cmd->add_option("--out", opt.out, "Output path");
    cmd->add_option("--format", opt.format, "table | machine")
        ->check(CLI::IsMember({"table", "machine"}));
  };

  CLI::App* generate = app.add_subcommand("generate", "Generate a world and its observations");
  add_common(generate);

  CLI::App* solve = app.add_subcommand("solve", "Solve the window of a world file");
  add_common(solve);
  std::string world_path;
  std::string trajectory_path;
  solve->add_option("world", world_path, "World file written by generate")->required();
  solve->add_option("--trajectory", trajectory_path,
                    "Write the estimated trajectory (timestamp tx ty tz qx qy qz qw)");

  CLI::App* benchmark = app.add_subcommand("benchmark", "Representation x solver x seed matrix");
  add_common(benchmark);
  std::string summary_path;
  benchmark->add_option("--summary", summary_path, "Write the CSV summary here");

  CLI::App* check = app.add_subcommand("check-jacobians", "Finite-difference Jacobian suite");
  add_common(check);
  int configurations = 500;
  double tolerance = 1e-5;
  check->add_option("--configurations", configurations, "Random configurations")
      ->check(CLI::PositiveNumber);
  check->add_option("--tolerance", tolerance, "Relative error threshold");

  CLI::App* config = app.add_subcommand("config", "Print the effective configuration");
  add_common(config);
  bool list_keys = false;
  config->add_flag("--keys", list_keys, "List accepted keys instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (generate->parsed()) return cmd_generate(opt);
    if (solve->parsed()) return cmd_solve(opt, world_path, trajectory_path);
    if (benchmark->parsed()) return cmd_benchmark(opt, summary_path);
    if (check->parsed()) return cmd_check_jacobians(opt, configurations, tolerance);
    if (config->parsed()) return cmd_config(opt, list_keys);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kConfig ? kExitConfig : kExitDiverged;
  }
  return kExitOk;
}
