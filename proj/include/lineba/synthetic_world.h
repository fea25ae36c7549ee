#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lineba/window_state.h"

namespace lineba {

struct SceneConfig {
  int n_points = 30;
  int n_lines = 40;
  Vec3 workspace_min{-3.0, -2.0, 4.0};
  Vec3 workspace_max{3.0, 2.0, 10.0};
  double line_length_min = 1.0;
  double line_length_max = 3.0;
  CameraIntrinsics intrinsics{460.0, 460.0, 376.0, 240.0};
  double image_width = 752.0;
  double image_height = 480.0;
  double min_depth = 0.2;  // visibility: depth in front of the camera
};

enum class TrajectoryKind { kLineSegment, kCircularArc, kRandomWalk, kRotationOnly };
const char* to_string(TrajectoryKind kind);
std::optional<TrajectoryKind> parse_trajectory_kind(const std::string& text);

struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::kLineSegment;
  int n_frames = 10;
  double step_length = 0.15;    // length units per frame
  double rotation_rate = 0.01;  // rad per frame
};

struct NoiseConfig {
  double pixel_sigma = 0.0;
  double odometry_rotation_sigma = 0.0;
  double odometry_translation_sigma = 0.0;
  bool endpoint_resample = true;
  std::uint64_t seed = 0;
  // Odometry factors are weighted with max(sigma, floor).
  double odometry_rotation_sigma_floor = 1e-3;
  double odometry_translation_sigma_floor = 1e-3;
  double visual_sigma_px = 1.5;  // assumed measurement sigma for whitening
};

// Throws kConfig on invalid values.
void validate(const SceneConfig& scene);
void validate(const TrajectoryConfig& trajectory);
void validate(const NoiseConfig& noise);

struct GroundTruthLine {
  Vec3 start;
  Vec3 end;
  PluckerLine plucker() const { return PluckerLine::through(start, end); }
};

struct SyntheticWorld {
  SceneConfig scene;
  TrajectoryConfig trajectory;
  std::uint64_t seed = 0;
  std::vector<CameraPose> poses;  // world-from-body, frame id = index
  CameraPose extrinsic;           // body-from-camera
  std::vector<Vec3> points;
  std::vector<GroundTruthLine> lines;
};

SyntheticWorld generate_world(const SceneConfig& scene, const TrajectoryConfig& trajectory,
                              std::uint64_t seed);

struct FrameObservations {
  FrameId frame = 0;
  std::vector<PointObservation> points;
  std::vector<LineFactor> lines;
};

struct ObservationSet {
  std::vector<FrameObservations> frames;
  std::vector<OdometryFactor> odometry;  // consecutive frames
  std::vector<CameraPose> ground_truth_poses;
  CameraPose extrinsic;
  CameraIntrinsics intrinsics;
  NoiseConfig noise;
};

// Visible features only; pixel noise is drawn in pixels and then normalized.
ObservationSet observe(const SyntheticWorld& world, const NoiseConfig& noise);

// Factor graph over all frames of an observation set.
FactorGraph build_factor_graph(const ObservationSet& obs);

// Factor graph plus the matching ground-truth window for one observation set.
struct WindowProblem {
  FactorGraph graph;
  SlidingWindowState ground_truth;
};

// Ground-truth window: true poses, features anchored in their first
// observing frame with anchor pixels taken from that observation. Features
// observed in fewer than two frames are left out.
SlidingWindowState ground_truth_state(const SyntheticWorld& world, const ObservationSet& obs,
                                      LineRepresentation representation);

// Graph restricted to the features of the ground-truth window.
WindowProblem make_window_problem(const SyntheticWorld& world, const ObservationSet& obs,
                                  LineRepresentation representation);

struct PerturbationSigmas {
  double rotation = 0.0;           // rad
  double translation = 0.0;        // length units
  double inverse_depth_rel = 0.0;  // relative, log-normal
};

// First pose left exact as the gauge anchor.
SlidingWindowState perturb_state(const SlidingWindowState& ground_truth,
                                 const PerturbationSigmas& sigmas, std::uint64_t seed);

// Poses by chaining the odometry measurements from the true first pose.
std::vector<CameraPose> chain_odometry(const ObservationSet& obs);

}  // namespace lineba
