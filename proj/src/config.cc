#include "lineba/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace lineba {

const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kJoint: return "joint";
    case SolverKind::kTwoStep: return "two-step";
  }
  return "unknown";
}

std::optional<SolverKind> parse_solver_kind(const std::string& text) {
  if (text == "joint") return SolverKind::kJoint;
  if (text == "two-step") return SolverKind::kTwoStep;
  return std::nullopt;
}

const char* to_string(InitialPoses mode) {
  switch (mode) {
    case InitialPoses::kOdometry: return "odometry";
    case InitialPoses::kPerturbedTruth: return "perturbed-truth";
  }
  return "unknown";
}

std::optional<InitialPoses> parse_initial_poses(const std::string& text) {
  if (text == "odometry") return InitialPoses::kOdometry;
  if (text == "perturbed-truth") return InitialPoses::kPerturbedTruth;
  return std::nullopt;
}

void RunConfig::validate() const {
  lineba::validate(scene);
  lineba::validate(trajectory);
  lineba::validate(noise);
  solver.validate();
  if (n_seeds < 1) throw Error(ErrorKind::kConfig, "run.n_seeds must be >= 1");
  if (rpe_delta < 1) throw Error(ErrorKind::kConfig, "run.rpe_delta must be >= 1");
  if (rpe_delta >= trajectory.n_frames) {
    throw Error(ErrorKind::kConfig, "run.rpe_delta must be smaller than trajectory.n_frames");
  }
  if (threads < 0) throw Error(ErrorKind::kConfig, "run.threads must be >= 0");
  if (representations.empty()) throw Error(ErrorKind::kConfig, "run.representations is empty");
  if (solvers.empty()) throw Error(ErrorKind::kConfig, "run.solvers is empty");
  if (perturbation.rotation < 0.0 || perturbation.translation < 0.0 ||
      perturbation.inverse_depth_rel < 0.0) {
    throw Error(ErrorKind::kConfig, "perturbation sigmas must be >= 0");
  }
  if (features.min_line_plane_angle < 0.0) {
    throw Error(ErrorKind::kConfig, "features.min_line_plane_angle must be >= 0");
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Thrown by value parsers; turned into a located kConfig error.
struct BadValue {
  std::string what;
};

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw BadValue{"expected a number"};
  return out;
}

long long to_integer(const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw BadValue{"expected an integer"};
  return out;
}

int to_int(const std::string& v) {
  const long long x = to_integer(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw BadValue{"integer out of range"};
  }
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw BadValue{"expected a non-negative integer"};
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw BadValue{"expected true or false"};
}

Vec3 to_vec3(const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 3) throw BadValue{"expected three comma-separated numbers"};
  return {to_double(parts[0]), to_double(parts[1]), to_double(parts[2])};
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}
std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(const Vec3& v) { return fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()); }

struct Field {
  std::string description;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

using FieldTable = std::vector<std::pair<std::string, Field>>;

#define LINEBA_NUMBER(key, member, desc)                                             \
  {key,                                                                              \
   {desc, [](RunConfig& c, const std::string& v) { c.member = to_double(v); },       \
    [](const RunConfig& c) { return fmt(static_cast<double>(c.member)); }}}
#define LINEBA_INT(key, member, desc)                                                \
  {key,                                                                              \
   {desc, [](RunConfig& c, const std::string& v) { c.member = to_int(v); },          \
    [](const RunConfig& c) { return std::to_string(c.member); }}}
#define LINEBA_BOOL(key, member, desc)                                               \
  {key,                                                                              \
   {desc, [](RunConfig& c, const std::string& v) { c.member = to_bool(v); },         \
    [](const RunConfig& c) { return fmt(static_cast<bool>(c.member)); }}}
#define LINEBA_VEC3(key, member, desc)                                               \
  {key,                                                                              \
   {desc, [](RunConfig& c, const std::string& v) { c.member = to_vec3(v); },         \
    [](const RunConfig& c) { return fmt(Vec3(c.member)); }}}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += to_string(item);
  }
  return out;
}

const FieldTable& fields() {
  static const FieldTable table = {
      LINEBA_INT("scene.n_points", scene.n_points, "number of 3D points"),
      LINEBA_INT("scene.n_lines", scene.n_lines, "number of 3D line segments"),
      LINEBA_VEC3("scene.workspace_min", scene.workspace_min, "workspace lower corner x, y, z"),
      LINEBA_VEC3("scene.workspace_max", scene.workspace_max, "workspace upper corner x, y, z"),
      LINEBA_NUMBER("scene.line_length_min", scene.line_length_min, "shortest segment length"),
      LINEBA_NUMBER("scene.line_length_max", scene.line_length_max, "longest segment length"),
      LINEBA_NUMBER("scene.min_depth", scene.min_depth, "visibility: minimum camera depth"),
      LINEBA_NUMBER("camera.fx", scene.intrinsics.fx, "focal length x (pixels)"),
      LINEBA_NUMBER("camera.fy", scene.intrinsics.fy, "focal length y (pixels)"),
      LINEBA_NUMBER("camera.cx", scene.intrinsics.cx, "principal point x (pixels)"),
      LINEBA_NUMBER("camera.cy", scene.intrinsics.cy, "principal point y (pixels)"),
      LINEBA_NUMBER("camera.width", scene.image_width, "image width (pixels)"),
      LINEBA_NUMBER("camera.height", scene.image_height, "image height (pixels)"),
      {"trajectory.kind",
       {"line-segment | circular-arc | random-walk | rotation-only",
        [](RunConfig& c, const std::string& v) {
          const auto k = parse_trajectory_kind(v);
          if (!k) throw BadValue{"unknown trajectory kind '" + v + "'"};
          c.trajectory.kind = *k;
        },
        [](const RunConfig& c) { return std::string(to_string(c.trajectory.kind)); }}},
      LINEBA_INT("trajectory.n_frames", trajectory.n_frames, "keyframes in the window"),
      LINEBA_NUMBER("trajectory.step_length", trajectory.step_length, "translation per frame"),
      LINEBA_NUMBER("trajectory.rotation_rate", trajectory.rotation_rate, "rotation per frame (rad)"),
      LINEBA_NUMBER("noise.pixel_sigma", noise.pixel_sigma, "observation noise (pixels)"),
      LINEBA_NUMBER("noise.odometry_rotation_sigma", noise.odometry_rotation_sigma,
                    "odometry rotation noise (rad)"),
      LINEBA_NUMBER("noise.odometry_translation_sigma", noise.odometry_translation_sigma,
                    "odometry translation noise"),
      LINEBA_BOOL("noise.endpoint_resample", noise.endpoint_resample,
                  "redraw observed endpoints along each line per frame"),
      LINEBA_NUMBER("noise.odometry_rotation_sigma_floor", noise.odometry_rotation_sigma_floor,
                    "lower bound of the odometry rotation sigma used for weighting"),
      LINEBA_NUMBER("noise.odometry_translation_sigma_floor",
                    noise.odometry_translation_sigma_floor,
                    "lower bound of the odometry translation sigma used for weighting"),
      LINEBA_NUMBER("noise.visual_sigma_px", noise.visual_sigma_px,
                    "assumed visual measurement sigma (pixels) for weighting"),
      LINEBA_INT("solver.max_iterations", solver.max_iterations, "joint LM iteration cap"),
      LINEBA_NUMBER("solver.lm_initial_damping", solver.lm_initial_damping, "initial LM damping"),
      LINEBA_NUMBER("solver.lm_damping_up", solver.lm_damping_up, "damping factor on rejection"),
      LINEBA_NUMBER("solver.lm_damping_down", solver.lm_damping_down,
                    "damping divisor on acceptance"),
      LINEBA_NUMBER("solver.lm_min_damping", solver.lm_min_damping, "damping lower bound"),
      LINEBA_NUMBER("solver.lm_max_damping", solver.lm_max_damping, "damping upper bound"),
      LINEBA_NUMBER("solver.convergence_tol_cost", solver.convergence_tol_cost,
                    "relative cost decrease that ends a solve"),
      LINEBA_NUMBER("solver.convergence_tol_step", solver.convergence_tol_step,
                    "increment norm that ends a solve"),
      LINEBA_NUMBER("solver.cauchy_scale", solver.cauchy_scale, "Cauchy loss scale"),
      LINEBA_BOOL("solver.robust_loss", solver.robust_loss, "apply the Cauchy loss"),
      LINEBA_INT("solver.two_step_max_outer", solver.two_step_max_outer,
                 "two-step outer iteration cap"),
      LINEBA_INT("solver.line_fit_max_iterations", solver.line_fit_max_iterations,
                 "per-line refinement iterations in the two-step refit"),
      LINEBA_BOOL("solver.two_step_reduced_pose_step", solver.two_step_reduced_pose_step,
                  "two-step pose step direction with line blocks eliminated"),
      LINEBA_BOOL("solver.optimize_extrinsic", solver.optimize_extrinsic,
                  "free the body-from-camera extrinsic"),
      LINEBA_NUMBER("solver.degenerate_line_threshold", solver.degenerate_line_threshold,
                    "relative (l1, l2) norm below which a line factor is skipped"),
      LINEBA_NUMBER("init.min_plane_offset", solver.init.min_plane_offset,
                    "parallax gate: plane distance from the anchor center"),
      LINEBA_NUMBER("init.min_inverse_depth", solver.init.min_inverse_depth,
                    "smallest accepted inverse depth"),
      LINEBA_NUMBER("init.max_inverse_depth", solver.init.max_inverse_depth,
                    "largest accepted inverse depth"),
      {"init.solver",
       {"linear | gauss-newton",
        [](RunConfig& c, const std::string& v) {
          if (v == "linear") {
            c.solver.init.solver = InitSolver::kLinear;
          } else if (v == "gauss-newton") {
            c.solver.init.solver = InitSolver::kGaussNewton;
          } else {
            throw BadValue{"expected linear or gauss-newton"};
          }
        },
        [](const RunConfig& c) {
          return std::string(c.solver.init.solver == InitSolver::kLinear ? "linear"
                                                                         : "gauss-newton");
        }}},
      LINEBA_NUMBER("features.min_line_plane_angle", features.min_line_plane_angle,
                    "minimum angle (rad) between anchor and observation planes"),
      {"run.initial_poses",
       {"odometry | perturbed-truth",
        [](RunConfig& c, const std::string& v) {
          const auto m = parse_initial_poses(v);
          if (!m) throw BadValue{"expected odometry or perturbed-truth"};
          c.initial_poses = *m;
        },
        [](const RunConfig& c) { return std::string(to_string(c.initial_poses)); }}},
      LINEBA_NUMBER("perturb.rotation", perturbation.rotation, "pose rotation sigma (rad)"),
      LINEBA_NUMBER("perturb.translation", perturbation.translation, "pose translation sigma"),
      LINEBA_NUMBER("perturb.inverse_depth_rel", perturbation.inverse_depth_rel,
                    "relative inverse-depth sigma"),
      {"run.seed",
       {"first seed",
        [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); },
        [](const RunConfig& c) { return std::to_string(c.seed); }}},
      LINEBA_INT("run.n_seeds", n_seeds, "number of consecutive seeds"),
      {"run.representations",
       {"comma list of inv-depth, orthonormal, point-only",
        [](RunConfig& c, const std::string& v) {
          c.representations.clear();
          for (const auto& item : split_list(v)) {
            const auto r = parse_line_representation(item);
            if (!r) throw BadValue{"unknown representation '" + item + "'"};
            c.representations.push_back(*r);
          }
        },
        [](const RunConfig& c) { return join(c.representations); }}},
      {"run.solvers",
       {"comma list of joint, two-step",
        [](RunConfig& c, const std::string& v) {
          c.solvers.clear();
          for (const auto& item : split_list(v)) {
            const auto s = parse_solver_kind(item);
            if (!s) throw BadValue{"unknown solver '" + item + "'"};
            c.solvers.push_back(*s);
          }
        },
        [](const RunConfig& c) { return join(c.solvers); }}},
      LINEBA_INT("run.rpe_delta", rpe_delta, "frame gap for the relative pose error"),
      LINEBA_INT("run.threads", threads, "worker threads for benchmarks (0: hardware)"),
  };
  return table;
}

#undef LINEBA_NUMBER
#undef LINEBA_INT
#undef LINEBA_BOOL
#undef LINEBA_VEC3

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& [name, field] : fields()) out.push_back({name, field.description});
    return out;
  }();
  return keys;
}

RunConfig parse_config(std::string_view text, const std::string& source, RunConfig base) {
  RunConfig config = std::move(base);
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, where + "expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* field = find_field(key);
    if (field == nullptr) throw Error(ErrorKind::kConfig, where + "unknown key '" + key + "'");
    if (value.empty()) throw Error(ErrorKind::kConfig, where + "missing value for '" + key + "'");
    try {
      field->set(config, value);
    } catch (const BadValue& bad) {
      throw Error(ErrorKind::kConfig,
                  where + "invalid value '" + value + "' for '" + key + "': " + bad.what);
    }
  }
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, source + ": " + e.what());
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), std::move(base));
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace lineba
