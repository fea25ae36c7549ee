#include "lineba/synthetic_world.h"

#include <cmath>
#include <random>

namespace lineba {

const char* to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kLineSegment: return "line-segment";
    case TrajectoryKind::kCircularArc: return "circular-arc";
    case TrajectoryKind::kRandomWalk: return "random-walk";
    case TrajectoryKind::kRotationOnly: return "rotation-only";
  }
  return "unknown";
}

std::optional<TrajectoryKind> parse_trajectory_kind(const std::string& text) {
  if (text == "line-segment") return TrajectoryKind::kLineSegment;
  if (text == "circular-arc") return TrajectoryKind::kCircularArc;
  if (text == "random-walk") return TrajectoryKind::kRandomWalk;
  if (text == "rotation-only") return TrajectoryKind::kRotationOnly;
  return std::nullopt;
}

void validate(const SceneConfig& scene) {
  if (scene.n_points < 0 || scene.n_lines < 0) {
    throw Error(ErrorKind::kConfig, "feature counts must be >= 0");
  }
  if ((scene.workspace_max - scene.workspace_min).minCoeff() <= 0.0) {
    throw Error(ErrorKind::kConfig, "workspace bounds must be well ordered");
  }
  if (!(scene.line_length_min > 0.0) || scene.line_length_max < scene.line_length_min) {
    throw Error(ErrorKind::kConfig, "line lengths must be positive and ordered");
  }
  if (!scene.intrinsics.is_valid() || !(scene.image_width > 0.0) || !(scene.image_height > 0.0)) {
    throw Error(ErrorKind::kConfig, "invalid camera model");
  }
}

void validate(const TrajectoryConfig& trajectory) {
  if (trajectory.n_frames < 2) throw Error(ErrorKind::kConfig, "n_frames must be >= 2");
  if (trajectory.step_length < 0.0 || trajectory.rotation_rate < 0.0) {
    throw Error(ErrorKind::kConfig, "step length and rotation rate must be >= 0");
  }
}

void validate(const NoiseConfig& noise) {
  if (noise.pixel_sigma < 0.0 || noise.odometry_rotation_sigma < 0.0 ||
      noise.odometry_translation_sigma < 0.0) {
    throw Error(ErrorKind::kConfig, "noise sigmas must be >= 0");
  }
  if (!(noise.odometry_rotation_sigma_floor > 0.0) ||
      !(noise.odometry_translation_sigma_floor > 0.0) || !(noise.visual_sigma_px > 0.0)) {
    throw Error(ErrorKind::kConfig, "weighting sigmas must be positive");
  }
}

namespace {

using Rng = std::mt19937_64;

Vec3 uniform_in_box(Rng& rng, const Vec3& lo, const Vec3& hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 p;
  for (int k = 0; k < 3; ++k) p[k] = lo[k] + u(rng) * (hi[k] - lo[k]);
  return p;
}

Vec3 gaussian3(Rng& rng, double sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  for (int k = 0; k < 3; ++k) v[k] = sigma * n(rng);
  return v;
}

Vec3 random_unit(Rng& rng) {
  Vec3 v = gaussian3(rng, 1.0);
  while (v.norm() < 1e-9) v = gaussian3(rng, 1.0);
  return v.normalized();
}

bool inside(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

std::vector<CameraPose> make_trajectory(const TrajectoryConfig& cfg, const SceneConfig& scene,
                                        Rng& rng) {
  std::vector<CameraPose> poses;
  poses.reserve(cfg.n_frames);
  const double step = cfg.kind == TrajectoryKind::kRotationOnly ? 0.0 : cfg.step_length;
  const double rate = cfg.rotation_rate;
  switch (cfg.kind) {
    case TrajectoryKind::kLineSegment:
      for (int k = 0; k < cfg.n_frames; ++k) {
        const Vec3 t(step * k, 0.2 * step * std::sin(0.9 * k), 0.0);
        const Vec3 w(0.3 * rate * std::sin(0.7 * k), -rate * k, 0.0);
        poses.emplace_back(so3::exp(w), t);
      }
      break;
    case TrajectoryKind::kCircularArc: {
      // Orbit the workspace center while facing it.
      const Vec3 center = 0.5 * (scene.workspace_min + scene.workspace_max);
      const double radius = center.z();
      for (int k = 0; k < cfg.n_frames; ++k) {
        const double a = radius > 0.0 ? step * k / radius : 0.0;
        const Vec3 t = Vec3(center.x(), center.y(), center.z()) +
                       radius * Vec3(-std::sin(a), 0.0, -std::cos(a));
        poses.emplace_back(so3::exp(Vec3(0.0, a, rate * k)), t);
      }
      break;
    }
    case TrajectoryKind::kRandomWalk: {
      CameraPose pose;
      poses.push_back(pose);
      for (int k = 1; k < cfg.n_frames; ++k) {
        Vec3 dir = random_unit(rng);
        dir.z() *= 0.3;
        pose.t += step * dir.normalized();
        pose.R = pose.R * so3::exp(rate * random_unit(rng));
        poses.push_back(pose);
      }
      break;
    }
    case TrajectoryKind::kRotationOnly:
      for (int k = 0; k < cfg.n_frames; ++k) {
        const Vec3 w(0.5 * rate * std::sin(1.3 * k), -rate * k, 0.2 * rate * k);
        poses.emplace_back(so3::exp(w), Vec3::Zero());
      }
      break;
  }
  return poses;
}

// Normalized coordinates of p (camera frame) when it is visible.
std::optional<Vec2> project_visible(const Vec3& p_c, const SceneConfig& scene) {
  if (!(p_c.z() > scene.min_depth)) return std::nullopt;
  const Vec2 uv = p_c.head<2>() / p_c.z();
  const Vec2 px = scene.intrinsics.to_pixel(uv);
  if (px.x() < 0.0 || px.x() > scene.image_width || px.y() < 0.0 || px.y() > scene.image_height) {
    return std::nullopt;
  }
  return uv;
}

Vec2 add_pixel_noise(const Vec2& uv, const CameraIntrinsics& K, double sigma, Rng& rng) {
  if (sigma <= 0.0) return uv;
  std::normal_distribution<double> n(0.0, 1.0);
  Vec2 px = K.to_pixel(uv);
  px.x() += sigma * n(rng);
  px.y() += sigma * n(rng);
  return K.to_normalized(px);
}

}  // namespace

SyntheticWorld generate_world(const SceneConfig& scene, const TrajectoryConfig& trajectory,
                              std::uint64_t seed) {
  validate(scene);
  validate(trajectory);
  Rng rng(seed);
  SyntheticWorld world;
  world.scene = scene;
  world.trajectory = trajectory;
  world.seed = seed;
  world.poses = make_trajectory(trajectory, scene, rng);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < scene.n_points; ++k) {
    world.points.push_back(uniform_in_box(rng, scene.workspace_min, scene.workspace_max));
  }
  for (int k = 0; k < scene.n_lines; ++k) {
    const double length =
        scene.line_length_min + u(rng) * (scene.line_length_max - scene.line_length_min);
    GroundTruthLine line;
    // Rejection sampling keeps both endpoints inside the workspace.
    for (int attempt = 0;; ++attempt) {
      line.start = uniform_in_box(rng, scene.workspace_min, scene.workspace_max);
      line.end = line.start + length * random_unit(rng);
      if (inside(line.end, scene.workspace_min, scene.workspace_max)) break;
      if (attempt > 1000) {
        // Shrink toward the start until it fits; the workspace is convex.
        while (!inside(line.end, scene.workspace_min, scene.workspace_max)) {
          line.end = line.start + 0.5 * (line.end - line.start);
        }
        break;
      }
    }
    world.lines.push_back(line);
  }
  return world;
}

ObservationSet observe(const SyntheticWorld& world, const NoiseConfig& noise) {
  validate(noise);
  Rng rng(noise.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SceneConfig& scene = world.scene;

  ObservationSet out;
  out.ground_truth_poses = world.poses;
  out.extrinsic = world.extrinsic;
  out.intrinsics = scene.intrinsics;
  out.noise = noise;

  for (std::size_t k = 0; k < world.poses.size(); ++k) {
    const CameraPose cam_inv = (world.poses[k] * world.extrinsic).inverse();
    FrameObservations frame;
    frame.frame = static_cast<FrameId>(k);
    for (std::size_t i = 0; i < world.points.size(); ++i) {
      const auto uv = project_visible(cam_inv * world.points[i], scene);
      if (!uv) continue;
      frame.points.push_back({static_cast<FeatureId>(i), frame.frame,
                              add_pixel_noise(*uv, scene.intrinsics, noise.pixel_sigma, rng)});
    }
    for (std::size_t i = 0; i < world.lines.size(); ++i) {
      const GroundTruthLine& line = world.lines[i];
      double a = 0.0;
      double b = 1.0;
      if (noise.endpoint_resample) {
        a = 0.25 * u(rng);
        b = 0.75 + 0.25 * u(rng);
      }
      const Vec3 pa = line.start + a * (line.end - line.start);
      const Vec3 pb = line.start + b * (line.end - line.start);
      const auto uva = project_visible(cam_inv * pa, scene);
      const auto uvb = project_visible(cam_inv * pb, scene);
      if (!uva || !uvb) continue;
      LineObservation obs{frame.frame,
                          add_pixel_noise(*uva, scene.intrinsics, noise.pixel_sigma, rng),
                          add_pixel_noise(*uvb, scene.intrinsics, noise.pixel_sigma, rng)};
      if (!obs.is_valid()) continue;
      frame.lines.push_back({static_cast<FeatureId>(i), obs});
    }
    out.frames.push_back(std::move(frame));
  }

  const double st = std::max(noise.odometry_translation_sigma, noise.odometry_translation_sigma_floor);
  const double sr = std::max(noise.odometry_rotation_sigma, noise.odometry_rotation_sigma_floor);
  Vec6 info;
  info << Vec3::Constant(1.0 / st), Vec3::Constant(1.0 / sr);
  for (std::size_t k = 1; k < world.poses.size(); ++k) {
    const CameraPose rel = relative(world.poses[k - 1], world.poses[k]);
    const Vec3 et = gaussian3(rng, noise.odometry_translation_sigma);
    const Vec3 er = gaussian3(rng, noise.odometry_rotation_sigma);
    OdometryFactor f;
    f.frame_i = static_cast<FrameId>(k - 1);
    f.frame_j = static_cast<FrameId>(k);
    f.rel_pose_meas = CameraPose(rel.R * so3::exp(er), rel.t + rel.R * et);
    f.sqrt_info = info.asDiagonal();
    out.odometry.push_back(f);
  }
  return out;
}

FactorGraph build_factor_graph(const ObservationSet& obs) {
  FactorGraph graph;
  graph.odometry = obs.odometry;
  for (const auto& frame : obs.frames) {
    graph.points.insert(graph.points.end(), frame.points.begin(), frame.points.end());
    graph.lines.insert(graph.lines.end(), frame.lines.begin(), frame.lines.end());
  }
  graph.point_sqrt_info = visual_sqrt_info(obs.intrinsics.fx, obs.noise.visual_sigma_px);
  graph.line_sqrt_info = graph.point_sqrt_info;
  graph.intrinsics = CameraIntrinsics::unit();
  return graph;
}

SlidingWindowState ground_truth_state(const SyntheticWorld& world, const ObservationSet& obs,
                                      LineRepresentation representation) {
  SlidingWindowState state;
  state.extrinsic = world.extrinsic;
  state.max_keyframes = std::max<std::size_t>(10, world.poses.size());
  for (std::size_t k = 0; k < world.poses.size(); ++k) {
    state.keyframes.push_back({static_cast<FrameId>(k), world.poses[k]});
  }

  std::map<FeatureId, std::vector<const PointObservation*>> point_obs;
  std::map<FeatureId, std::vector<const LineFactor*>> line_obs;
  for (const auto& frame : obs.frames) {
    for (const auto& o : frame.points) point_obs[o.feature].push_back(&o);
    for (const auto& f : frame.lines) line_obs[f.feature].push_back(&f);
  }

  for (const auto& [id, list] : point_obs) {
    if (list.size() < 2) continue;
    const PointObservation& first = *list.front();
    const Vec3 p_c = state.camera_pose(first.frame_id).inverse() * world.points[id];
    state.points[id] = {first.frame_id, first.pixel, 1.0 / p_c.z()};
  }
  for (const auto& [id, list] : line_obs) {
    if (list.size() < 2) continue;
    const LineObservation& first = list.front()->obs;
    const CameraPose cam = state.camera_pose(first.frame_id);
    const PluckerLine world_line = world.lines[id].plucker();
    const PluckerLine local = invert_transform_line(world_line, cam);
    std::optional<InverseDepthLine> inv;
    try {
      inv = inverse_depth_from_plucker(local, first.s_obs, first.e_obs);
    } catch (const Error&) {
      try {
        inv = closest_inverse_depth_line(local, first.s_obs, first.e_obs);
      } catch (const Error&) {
        continue;
      }
    }
    OrthonormalLine orth = orthonormal_from_plucker(world_line);
    state.lines.emplace(id, LineLandmark{first.frame_id, *inv, orth});
  }
  state.representation = representation;
  return state;
}

WindowProblem make_window_problem(const SyntheticWorld& world, const ObservationSet& obs,
                                  LineRepresentation representation) {
  WindowProblem problem{build_factor_graph(obs), ground_truth_state(world, obs, representation)};
  const auto& st = problem.ground_truth;
  std::erase_if(problem.graph.points,
                [&](const PointObservation& o) { return !st.points.contains(o.feature); });
  std::erase_if(problem.graph.lines,
                [&](const LineFactor& f) { return !st.lines.contains(f.feature); });
  return problem;
}

SlidingWindowState perturb_state(const SlidingWindowState& ground_truth,
                                 const PerturbationSigmas& sigmas, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  SlidingWindowState out = ground_truth;
  for (std::size_t k = 1; k < out.keyframes.size(); ++k) {
    Vec6 delta;
    delta << gaussian3(rng, sigmas.translation), gaussian3(rng, sigmas.rotation);
    out.keyframes[k].pose = out.keyframes[k].pose.plus(delta);
  }
  for (auto& [id, p] : out.points) p.inv_depth *= std::exp(sigmas.inverse_depth_rel * n(rng));
  for (auto& [id, line] : out.lines) {
    const double fs = std::exp(sigmas.inverse_depth_rel * n(rng));
    const double fe = std::exp(sigmas.inverse_depth_rel * n(rng));
    if (sigmas.inverse_depth_rel == 0.0) continue;
    line.inverse_depth = line.inverse_depth.with_inverse_depths(line.inverse_depth.lambda_s() * fs,
                                                                line.inverse_depth.lambda_e() * fe);
    if (out.representation == LineRepresentation::kOrthonormal) {
      line.orthonormal = orthonormal_from_plucker(
          transform_line(plucker_from_inverse_depth(line.inverse_depth),
                         ground_truth.camera_pose(line.anchor_frame)));
    }
  }
  return out;
}

std::vector<CameraPose> chain_odometry(const ObservationSet& obs) {
  std::vector<CameraPose> poses;
  if (obs.ground_truth_poses.empty()) return poses;
  poses.push_back(obs.ground_truth_poses.front());
  for (const auto& f : obs.odometry) poses.push_back(poses.back() * f.rel_pose_meas);
  return poses;
}

}  // namespace lineba
