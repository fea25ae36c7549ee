#include "lineba/io.h"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace lineba {

using nlohmann::json;

namespace {

constexpr const char* kWorldFormat = "lineba-world";
constexpr int kWorldVersion = 1;

json vec(const Eigen::Ref<const VecX>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> to_vec(const json& j) {
  if (!j.is_array() || j.size() != N) {
    throw Error(ErrorKind::kConfig, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = j.at(i).get<double>();
  return out;
}

// Rotation as a row-major 3x3 matrix so that a reloaded world reproduces
// runs bit for bit; a quaternion would not.
json pose_json(const CameraPose& p) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) r.push_back(vec(Vec3(p.R.row(i).transpose())));
  return {{"R", r}, {"t", vec(p.t)}};
}

CameraPose pose_from(const json& j) {
  const json& r = j.at("R");
  if (!r.is_array() || r.size() != 3) throw Error(ErrorKind::kConfig, "R must have 3 rows");
  Mat3 rot;
  for (int i = 0; i < 3; ++i) rot.row(i) = to_vec<3>(r.at(i)).transpose();
  try {
    return CameraPose::checked(rot, to_vec<3>(j.at("t")));
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
}

json scene_json(const SceneConfig& s) {
  return {{"n_points", s.n_points},
          {"n_lines", s.n_lines},
          {"workspace_min", vec(s.workspace_min)},
          {"workspace_max", vec(s.workspace_max)},
          {"line_length_min", s.line_length_min},
          {"line_length_max", s.line_length_max},
          {"intrinsics", {s.intrinsics.fx, s.intrinsics.fy, s.intrinsics.cx, s.intrinsics.cy}},
          {"image_width", s.image_width},
          {"image_height", s.image_height},
          {"min_depth", s.min_depth}};
}

SceneConfig scene_from(const json& j) {
  SceneConfig s;
  s.n_points = j.at("n_points").get<int>();
  s.n_lines = j.at("n_lines").get<int>();
  s.workspace_min = to_vec<3>(j.at("workspace_min"));
  s.workspace_max = to_vec<3>(j.at("workspace_max"));
  s.line_length_min = j.at("line_length_min").get<double>();
  s.line_length_max = j.at("line_length_max").get<double>();
  const Vec4 k = to_vec<4>(j.at("intrinsics"));
  s.intrinsics = {k[0], k[1], k[2], k[3]};
  s.image_width = j.at("image_width").get<double>();
  s.image_height = j.at("image_height").get<double>();
  s.min_depth = j.at("min_depth").get<double>();
  return s;
}

json noise_json(const NoiseConfig& n) {
  return {{"pixel_sigma", n.pixel_sigma},
          {"odometry_rotation_sigma", n.odometry_rotation_sigma},
          {"odometry_translation_sigma", n.odometry_translation_sigma},
          {"endpoint_resample", n.endpoint_resample},
          {"seed", n.seed},
          {"odometry_rotation_sigma_floor", n.odometry_rotation_sigma_floor},
          {"odometry_translation_sigma_floor", n.odometry_translation_sigma_floor},
          {"visual_sigma_px", n.visual_sigma_px}};
}

NoiseConfig noise_from(const json& j) {
  NoiseConfig n;
  n.pixel_sigma = j.at("pixel_sigma").get<double>();
  n.odometry_rotation_sigma = j.at("odometry_rotation_sigma").get<double>();
  n.odometry_translation_sigma = j.at("odometry_translation_sigma").get<double>();
  n.endpoint_resample = j.at("endpoint_resample").get<bool>();
  n.seed = j.at("seed").get<std::uint64_t>();
  n.odometry_rotation_sigma_floor = j.at("odometry_rotation_sigma_floor").get<double>();
  n.odometry_translation_sigma_floor = j.at("odometry_translation_sigma_floor").get<double>();
  n.visual_sigma_px = j.at("visual_sigma_px").get<double>();
  return n;
}

}  // namespace

std::string world_to_json(const WorldFile& file) {
  const SyntheticWorld& w = file.world;
  const ObservationSet& o = file.observations;
  json doc;
  doc["format"] = kWorldFormat;
  doc["version"] = kWorldVersion;
  doc["seed"] = w.seed;
  doc["scene"] = scene_json(w.scene);
  doc["trajectory"] = {{"kind", to_string(w.trajectory.kind)},
                       {"n_frames", w.trajectory.n_frames},
                       {"step_length", w.trajectory.step_length},
                       {"rotation_rate", w.trajectory.rotation_rate}};
  doc["extrinsic"] = pose_json(w.extrinsic);
  doc["poses"] = json::array();
  for (const auto& p : w.poses) doc["poses"].push_back(pose_json(p));
  doc["points"] = json::array();
  for (const auto& p : w.points) doc["points"].push_back(vec(p));
  doc["lines"] = json::array();
  for (const auto& l : w.lines) doc["lines"].push_back({{"start", vec(l.start)}, {"end", vec(l.end)}});

  json obs;
  obs["noise"] = noise_json(o.noise);
  obs["frames"] = json::array();
  for (const auto& f : o.frames) {
    json frame{{"frame", f.frame}, {"points", json::array()}, {"lines", json::array()}};
    for (const auto& p : f.points) {
      frame["points"].push_back({{"feature", p.feature}, {"uv", vec(p.pixel)}});
    }
    for (const auto& l : f.lines) {
      frame["lines"].push_back(
          {{"feature", l.feature}, {"s", vec(l.obs.s_obs)}, {"e", vec(l.obs.e_obs)}});
    }
    obs["frames"].push_back(std::move(frame));
  }
  obs["odometry"] = json::array();
  for (const auto& f : o.odometry) {
    json info = json::array();
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 6; ++c) info.push_back(f.sqrt_info(r, c));
    }
    obs["odometry"].push_back({{"frame_i", f.frame_i},
                               {"frame_j", f.frame_j},
                               {"relative_pose", pose_json(f.rel_pose_meas)},
                               {"sqrt_info", std::move(info)}});
  }
  doc["observations"] = std::move(obs);
  return doc.dump(1);
}

WorldFile world_from_json(const std::string& text) {
  WorldFile file;
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kWorldFormat) {
      throw Error(ErrorKind::kConfig, "not a lineba world file");
    }
    if (doc.at("version").get<int>() != kWorldVersion) {
      throw Error(ErrorKind::kConfig, "unsupported world file version");
    }
    SyntheticWorld& w = file.world;
    w.seed = doc.at("seed").get<std::uint64_t>();
    w.scene = scene_from(doc.at("scene"));
    const json& t = doc.at("trajectory");
    const auto kind = parse_trajectory_kind(t.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorKind::kConfig, "unknown trajectory kind");
    w.trajectory.kind = *kind;
    w.trajectory.n_frames = t.at("n_frames").get<int>();
    w.trajectory.step_length = t.at("step_length").get<double>();
    w.trajectory.rotation_rate = t.at("rotation_rate").get<double>();
    w.extrinsic = pose_from(doc.at("extrinsic"));
    for (const auto& p : doc.at("poses")) w.poses.push_back(pose_from(p));
    for (const auto& p : doc.at("points")) w.points.push_back(to_vec<3>(p));
    for (const auto& l : doc.at("lines")) {
      w.lines.push_back({to_vec<3>(l.at("start")), to_vec<3>(l.at("end"))});
    }

    ObservationSet& o = file.observations;
    const json& obs = doc.at("observations");
    o.noise = noise_from(obs.at("noise"));
    o.ground_truth_poses = w.poses;
    o.extrinsic = w.extrinsic;
    o.intrinsics = w.scene.intrinsics;
    for (const auto& f : obs.at("frames")) {
      FrameObservations frame;
      frame.frame = f.at("frame").get<FrameId>();
      for (const auto& p : f.at("points")) {
        frame.points.push_back({p.at("feature").get<FeatureId>(), frame.frame, to_vec<2>(p.at("uv"))});
      }
      for (const auto& l : f.at("lines")) {
        frame.lines.push_back({l.at("feature").get<FeatureId>(),
                               {frame.frame, to_vec<2>(l.at("s")), to_vec<2>(l.at("e"))}});
      }
      o.frames.push_back(std::move(frame));
    }
    for (const auto& f : obs.at("odometry")) {
      OdometryFactor factor;
      factor.frame_i = f.at("frame_i").get<FrameId>();
      factor.frame_j = f.at("frame_j").get<FrameId>();
      factor.rel_pose_meas = pose_from(f.at("relative_pose"));
      const json& info = f.at("sqrt_info");
      if (!info.is_array() || info.size() != 36) {
        throw Error(ErrorKind::kConfig, "sqrt_info must hold 36 numbers");
      }
      for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) factor.sqrt_info(r, c) = info.at(6 * r + c).get<double>();
      }
      o.odometry.push_back(factor);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("malformed world file: ") + e.what());
  }
  return file;
}

void save_world(const std::filesystem::path& path, const WorldFile& file) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write " + path.string());
  out << world_to_json(file) << '\n';
}

WorldFile load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot read world file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return world_from_json(buffer.str());
}

std::string report_to_json_line(const RunReport& r) {
  json iterations = json::array();
  for (const auto& it : r.iterations) {
    iterations.push_back({{"iteration", it.iteration},
                          {"cost_before", it.cost_before},
                          {"cost_after_fit", it.cost_after_fit},
                          {"cost", it.cost},
                          {"damping", it.damping},
                          {"attempts", it.attempts},
                          {"accepted", it.accepted},
                          {"step_norm", it.step_norm},
                          {"dimension", it.dimension},
                          {"line_fit_seconds", it.line_fit_seconds},
                          {"step_seconds", it.step_seconds}});
  }
  const json record{{"representation", to_string(r.representation)},
                    {"solver", to_string(r.solver)},
                    {"seed", r.seed},
                    {"status", to_string(r.status)},
                    {"ate_rmse", r.ate_rmse},
                    {"rpe_translation_rmse", r.rpe_translation_rmse},
                    {"rpe_rotation_rmse", r.rpe_rotation_rmse},
                    {"rpe_delta", r.rpe_delta},
                    {"initial_cost", r.initial_cost},
                    {"final_cost", r.final_cost},
                    {"solve_seconds", r.solve_seconds},
                    {"line_fit_seconds", r.line_fit_seconds},
                    {"pose_step_seconds", r.pose_step_seconds},
                    {"mean_iteration_seconds", r.mean_iteration_seconds},
                    {"line_parameter_count", r.line_parameter_count},
                    {"normal_equation_dimension", r.normal_equation_dimension},
                    {"n_keyframes", r.n_keyframes},
                    {"n_points", r.n_points},
                    {"n_lines", r.n_lines},
                    {"iterations", std::move(iterations)},
                    {"config", r.config_snapshot}};
  return record.dump();
}

void write_jsonl(std::ostream& out, const std::vector<RunReport>& reports) {
  for (const auto& r : reports) out << report_to_json_line(r) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "representation,solver,runs,diverged,median_ate,mean_ate,median_rpe_translation,"
         "median_rpe_rotation,mean_iteration_ms,mean_iterations,line_parameter_count,"
         "normal_equation_dimension\n";
  const auto old = out.precision(10);
  for (const auto& r : rows) {
    out << to_string(r.representation) << ',' << to_string(r.solver) << ',' << r.runs << ','
        << r.diverged << ',' << r.median_ate << ',' << r.mean_ate << ','
        << r.median_rpe_translation << ',' << r.median_rpe_rotation << ','
        << r.mean_iteration_ms << ',' << r.mean_iterations << ',' << r.line_parameter_count
        << ',' << r.normal_equation_dimension << '\n';
  }
  out.precision(old);
}

void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << std::left << std::setw(12) << "lines" << std::setw(10) << "solver" << std::right
      << std::setw(6) << "runs" << std::setw(13) << "median ATE" << std::setw(13) << "RPE trans"
      << std::setw(13) << "RPE rot" << std::setw(11) << "iter ms" << std::setw(8) << "iters"
      << std::setw(8) << "dim" << '\n';
  for (const auto& r : rows) {
    std::ostringstream ate, rt, rr, ms, its;
    ate << std::scientific << std::setprecision(3) << r.median_ate;
    rt << std::scientific << std::setprecision(3) << r.median_rpe_translation;
    rr << std::scientific << std::setprecision(3) << r.median_rpe_rotation;
    ms << std::fixed << std::setprecision(3) << r.mean_iteration_ms;
    its << std::fixed << std::setprecision(1) << r.mean_iterations;
    out << std::left << std::setw(12) << to_string(r.representation) << std::setw(10)
        << to_string(r.solver) << std::right << std::setw(6) << r.runs << std::setw(13)
        << ate.str() << std::setw(13) << rt.str() << std::setw(13) << rr.str() << std::setw(11)
        << ms.str() << std::setw(8) << its.str() << std::setw(8) << r.normal_equation_dimension
        << '\n';
  }
}

void write_tum(std::ostream& out, const Trajectory& trajectory) {
  const auto old = out.precision(17);
  for (const auto& s : trajectory.samples()) {
    const Eigen::Quaterniond q(s.pose.R);
    out << s.timestamp << ' ' << s.pose.t.x() << ' ' << s.pose.t.y() << ' ' << s.pose.t.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
  out.precision(old);
}

Trajectory read_tum(std::istream& in) {
  std::vector<TrajectorySample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double v[8];
    for (double& x : v) {
      if (!(ss >> x)) {
        throw Error(ErrorKind::kConfig, "trajectory line " + std::to_string(line_no) +
                                            ": expected 8 numbers");
      }
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    samples.push_back({v[0], CameraPose(q.normalized().toRotationMatrix(), Vec3(v[1], v[2], v[3]))});
  }
  return Trajectory(std::move(samples));
}

}  // namespace lineba
