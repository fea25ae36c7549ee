#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lineba/solver.h"
#include "lineba/synthetic_world.h"
#include "lineba/window_builder.h"

namespace lineba {

enum class SolverKind { kJoint, kTwoStep };
const char* to_string(SolverKind kind);
std::optional<SolverKind> parse_solver_kind(const std::string& text);

// Where solver runs start.
enum class InitialPoses {
  kOdometry,        // chained odometry, features triangulated at those poses
  kPerturbedTruth,  // ground-truth window pushed off by `perturbation`
};
const char* to_string(InitialPoses mode);
std::optional<InitialPoses> parse_initial_poses(const std::string& text);

// Everything a run or benchmark needs. Mirrors the key-value config file;
// see `config_keys()` for the accepted keys.
struct RunConfig {
  SceneConfig scene;
  TrajectoryConfig trajectory;
  NoiseConfig noise;
  SolverConfig solver;
  FeatureInitOptions features;
  InitialPoses initial_poses = InitialPoses::kOdometry;
  PerturbationSigmas perturbation{0.02, 0.05, 0.0};
  std::uint64_t seed = 0;
  int n_seeds = 1;
  std::vector<LineRepresentation> representations{LineRepresentation::kInverseDepth,
                                                  LineRepresentation::kOrthonormal,
                                                  LineRepresentation::kPointOnly};
  std::vector<SolverKind> solvers{SolverKind::kJoint, SolverKind::kTwoStep};
  int rpe_delta = 1;
  int threads = 0;  // 0: one per hardware thread

  // Throws kConfig on invalid values.
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string description;
};
const std::vector<ConfigKey>& config_keys();

// `key = value` lines; '#' starts a comment. Later keys override earlier
// ones. Throws kConfig naming the source, line and key on any error.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>",
                       RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Every key with its current value, parseable by parse_config.
std::string to_config_text(const RunConfig& config);

}  // namespace lineba
