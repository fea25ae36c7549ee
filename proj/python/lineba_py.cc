#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "lineba/config.h"
#include "lineba/harness.h"
#include "lineba/initialization.h"
#include "lineba/io.h"
#include "lineba/jacobian_check.h"
#include "lineba/line_geometry.h"
#include "lineba/metrics.h"
#include "lineba/residuals.h"
#include "lineba/solver.h"
#include "lineba/synthetic_world.h"

namespace py = pybind11;
using namespace lineba;

namespace {

template <typename E>
void bind_to_string(py::enum_<E>& e) {
  // Assigned directly: enum_ installs its own __str__ after plain defs.
  e.attr("__str__") =
      py::cpp_function([](E v) { return std::string(to_string(v)); }, py::is_method(e));
}

}  // namespace

PYBIND11_MODULE(lineba, m) {
  m.doc() = "Sliding-window bundle adjustment with inverse-depth line features";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object kind = py::cast(std::string(to_string(e.kind())));
      PyObject* args = Py_BuildValue("(sO)", e.what(), kind.ptr());
      PyErr_SetObject(error.ptr(), args);
      Py_XDECREF(args);
    }
  });

  // Geometry ---------------------------------------------------------------

  py::class_<CameraPose>(m, "CameraPose")
      .def(py::init<>())
      .def(py::init(&CameraPose::checked), py::arg("R"), py::arg("t"))
      .def_readwrite("R", &CameraPose::R)
      .def_readwrite("t", &CameraPose::t)
      .def("inverse", &CameraPose::inverse)
      .def("plus", &CameraPose::plus)
      .def("minus", &CameraPose::minus)
      .def("is_valid", &CameraPose::is_valid, py::arg("tolerance") = 1e-10)
      .def("__mul__", [](const CameraPose& a, const CameraPose& b) { return a * b; })
      .def("transform", [](const CameraPose& a, const Vec3& p) { return Vec3(a * p); })
      .def("__repr__", [](const CameraPose& p) {
        std::ostringstream os;
        os << "CameraPose(t=[" << p.t.transpose() << "])";
        return os.str();
      });

  m.def("so3_exp", &so3::exp);
  m.def("so3_log", &so3::log);

  py::class_<PluckerLine>(m, "PluckerLine")
      .def(py::init<>())
      .def(py::init<const Vec3&, const Vec3&>(), py::arg("n"), py::arg("d"))
      .def_readwrite("n", &PluckerLine::n)
      .def_readwrite("d", &PluckerLine::d)
      .def_static("through", &PluckerLine::through)
      .def("vector", &PluckerLine::vector)
      .def("normalized", &PluckerLine::normalized)
      .def("klein_residual", &PluckerLine::klein_residual)
      .def("is_valid", &PluckerLine::is_valid)
      .def("point", &PluckerLine::point);

  py::class_<OrthonormalLine>(m, "OrthonormalLine")
      .def(py::init<>())
      .def_readwrite("theta3", &OrthonormalLine::theta3)
      .def_readwrite("theta1", &OrthonormalLine::theta1)
      .def("U", &OrthonormalLine::U)
      .def("W", &OrthonormalLine::W)
      .def("plus", &OrthonormalLine::plus);

  py::class_<InverseDepthLine>(m, "InverseDepthLine")
      .def(py::init<double, double, const Vec2&, const Vec2&>(), py::arg("lambda_s"),
           py::arg("lambda_e"), py::arg("anchor_s"), py::arg("anchor_e"))
      .def_property_readonly("lambda_s", &InverseDepthLine::lambda_s)
      .def_property_readonly("lambda_e", &InverseDepthLine::lambda_e)
      .def_property_readonly("anchor_s", &InverseDepthLine::anchor_s)
      .def_property_readonly("anchor_e", &InverseDepthLine::anchor_e)
      .def("start_point", &InverseDepthLine::start_point)
      .def("end_point", &InverseDepthLine::end_point);

  m.def("plucker_distance", &plucker_distance, py::arg("a"), py::arg("b"),
        py::arg("allow_flip") = true);
  m.def("plucker_from_inverse_depth", &plucker_from_inverse_depth);
  m.def("inverse_depth_from_plucker", &inverse_depth_from_plucker);
  m.def("orthonormal_from_plucker", &orthonormal_from_plucker);
  m.def("plucker_from_orthonormal", &plucker_from_orthonormal);
  m.def("transform_line", &transform_line);
  m.def("invert_transform_line", &invert_transform_line);
  m.def("line_motion_matrix", &line_motion_matrix);

  // Residuals --------------------------------------------------------------

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy) {
             return CameraIntrinsics{fx, fy, cx, cy};
           }),
           py::arg("fx") = 1.0, py::arg("fy") = 1.0, py::arg("cx") = 0.0, py::arg("cy") = 0.0)
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def("line_projection_matrix", &CameraIntrinsics::line_projection_matrix);

  py::class_<LineObservation>(m, "LineObservation")
      .def(py::init([](FrameId frame, const Vec2& s, const Vec2& e) {
             return LineObservation{frame, s, e};
           }),
           py::arg("frame_id"), py::arg("s_obs"), py::arg("e_obs"))
      .def_readwrite("frame_id", &LineObservation::frame_id)
      .def_readwrite("s_obs", &LineObservation::s_obs)
      .def_readwrite("e_obs", &LineObservation::e_obs);

  m.def("project_line", [](const PluckerLine& line, const CameraIntrinsics& K) {
    return project_line(line, K).l;
  });
  m.def("line_residual", &line_residual, py::arg("line"), py::arg("pose_anchor"),
        py::arg("pose_obs"), py::arg("extrinsic"), py::arg("obs"),
        py::arg("K") = CameraIntrinsics::unit());

  py::class_<LineJacobians>(m, "LineJacobians")
      .def_readonly("residual", &LineJacobians::residual)
      .def_readonly("d_pose_anchor", &LineJacobians::d_pose_anchor)
      .def_readonly("d_pose_obs", &LineJacobians::d_pose_obs)
      .def_readonly("d_extrinsic", &LineJacobians::d_extrinsic)
      .def_readonly("d_lambda", &LineJacobians::d_lambda);
  m.def("line_jacobians", &line_jacobians, py::arg("line"), py::arg("pose_anchor"),
        py::arg("pose_obs"), py::arg("extrinsic"), py::arg("obs"),
        py::arg("K") = CameraIntrinsics::unit());

  // Initialization ---------------------------------------------------------

  py::enum_<InitStatus> init_status(m, "InitStatus");
  init_status.value("OK", InitStatus::kOk)
      .value("ROTATION_ONLY_DEGENERATE", InitStatus::kRotationOnlyDegenerate)
      .value("BEHIND_CAMERA", InitStatus::kBehindCamera)
      .value("INSUFFICIENT_PARALLAX", InitStatus::kInsufficientParallax)
      .value("OUT_OF_RANGE", InitStatus::kOutOfRange);
  bind_to_string(init_status);

  py::class_<LineTrack>(m, "LineTrack")
      .def(py::init([](FrameId anchor, const Vec2& s, const Vec2& e,
                       std::vector<LineObservation> obs) {
             return LineTrack{anchor, s, e, std::move(obs)};
           }),
           py::arg("anchor_frame"), py::arg("anchor_s"), py::arg("anchor_e"),
           py::arg("observations"))
      .def_readwrite("anchor_frame", &LineTrack::anchor_frame)
      .def_readwrite("anchor_s", &LineTrack::anchor_s)
      .def_readwrite("anchor_e", &LineTrack::anchor_e)
      .def_readwrite("observations", &LineTrack::observations);

  py::class_<InverseDepthInit>(m, "InverseDepthInit")
      .def_readonly("status", &InverseDepthInit::status)
      .def_readonly("lambda_s", &InverseDepthInit::lambda_s)
      .def_readonly("lambda_e", &InverseDepthInit::lambda_e)
      .def_readonly("used_views", &InverseDepthInit::used_views)
      .def("ok", &InverseDepthInit::ok);

  m.def("init_inverse_depth_two_view", &init_inverse_depth_two_view, py::arg("track"),
        py::arg("rel_pose"));
  m.def(
      "init_inverse_depth_multi_view",
      [](const LineTrack& track, const std::vector<CameraPose>& rel_poses) {
        return init_inverse_depth_multi_view(track, rel_poses);
      },
      py::arg("track"), py::arg("rel_poses"));

  // Synthetic worlds -------------------------------------------------------

  py::enum_<LineRepresentation> rep(m, "LineRepresentation");
  rep.value("INVERSE_DEPTH", LineRepresentation::kInverseDepth)
      .value("ORTHONORMAL", LineRepresentation::kOrthonormal)
      .value("POINT_ONLY", LineRepresentation::kPointOnly);
  bind_to_string(rep);
  m.def("parse_line_representation", &parse_line_representation);

  py::enum_<SolverKind> solver_kind(m, "SolverKind");
  solver_kind.value("JOINT", SolverKind::kJoint).value("TWO_STEP", SolverKind::kTwoStep);
  bind_to_string(solver_kind);

  py::enum_<SolveStatus> status(m, "SolveStatus");
  status.value("CONVERGED", SolveStatus::kConverged)
      .value("MAX_ITERATIONS", SolveStatus::kMaxIterations)
      .value("DIVERGED", SolveStatus::kDiverged);
  bind_to_string(status);

  py::class_<SyntheticWorld>(m, "SyntheticWorld")
      .def_readonly("seed", &SyntheticWorld::seed)
      .def_readonly("poses", &SyntheticWorld::poses)
      .def_readonly("extrinsic", &SyntheticWorld::extrinsic)
      .def_readonly("points", &SyntheticWorld::points)
      .def_property_readonly("lines", [](const SyntheticWorld& w) {
        std::vector<std::pair<Vec3, Vec3>> out;
        for (const auto& l : w.lines) out.emplace_back(l.start, l.end);
        return out;
      });

  py::class_<ObservationSet>(m, "ObservationSet")
      .def_property_readonly("n_frames",
                             [](const ObservationSet& o) { return o.frames.size(); })
      .def_property_readonly("n_point_observations",
                             [](const ObservationSet& o) {
                               std::size_t n = 0;
                               for (const auto& f : o.frames) n += f.points.size();
                               return n;
                             })
      .def_property_readonly("n_line_observations",
                             [](const ObservationSet& o) {
                               std::size_t n = 0;
                               for (const auto& f : o.frames) n += f.lines.size();
                               return n;
                             })
      .def_readonly("ground_truth_poses", &ObservationSet::ground_truth_poses);

  py::class_<WorldFile>(m, "WorldFile")
      .def_readonly("world", &WorldFile::world)
      .def_readonly("observations", &WorldFile::observations)
      .def("to_json", [](const WorldFile& f) { return world_to_json(f); })
      .def_static("from_json", &world_from_json);

  // Config and runs ---------------------------------------------------------

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static(
          "parse", [](const std::string& text) { return parse_config(text); }, py::arg("text"))
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"))
      .def("to_text", [](const RunConfig& c) { return to_config_text(c); })
      .def("validate", &RunConfig::validate)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("n_seeds", &RunConfig::n_seeds)
      .def_readwrite("representations", &RunConfig::representations)
      .def_readwrite("solvers", &RunConfig::solvers)
      .def_readwrite("threads", &RunConfig::threads);
  m.def("config_keys", [] {
    std::vector<std::string> names;
    for (const auto& k : config_keys()) names.push_back(k.name);
    return names;
  });

  m.def(
      "generate",
      [](const RunConfig& config, std::uint64_t seed) {
        RunSeeds seeds = derive_seeds(seed);
        NoiseConfig noise = config.noise;
        noise.seed = seeds.noise;
        WorldFile f;
        f.world = generate_world(config.scene, config.trajectory, seeds.world);
        f.observations = observe(f.world, noise);
        return f;
      },
      py::arg("config"), py::arg("seed"));

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("iteration", &IterationRecord::iteration)
      .def_readonly("cost_before", &IterationRecord::cost_before)
      .def_readonly("cost_after_fit", &IterationRecord::cost_after_fit)
      .def_readonly("cost", &IterationRecord::cost)
      .def_readonly("accepted", &IterationRecord::accepted);

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("representation", &RunReport::representation)
      .def_readonly("solver", &RunReport::solver)
      .def_readonly("seed", &RunReport::seed)
      .def_readonly("status", &RunReport::status)
      .def_readonly("ate_rmse", &RunReport::ate_rmse)
      .def_readonly("rpe_translation_rmse", &RunReport::rpe_translation_rmse)
      .def_readonly("rpe_rotation_rmse", &RunReport::rpe_rotation_rmse)
      .def_readonly("initial_cost", &RunReport::initial_cost)
      .def_readonly("final_cost", &RunReport::final_cost)
      .def_readonly("iterations", &RunReport::iterations)
      .def_readonly("line_parameter_count", &RunReport::line_parameter_count)
      .def_readonly("normal_equation_dimension", &RunReport::normal_equation_dimension)
      .def_readonly("n_keyframes", &RunReport::n_keyframes)
      .def_readonly("n_points", &RunReport::n_points)
      .def_readonly("n_lines", &RunReport::n_lines)
      .def_property_readonly("estimate",
                             [](const RunReport& r) {
                               std::vector<CameraPose> out;
                               for (const auto& s : r.estimate.samples()) out.push_back(s.pose);
                               return out;
                             })
      .def("to_json", [](const RunReport& r) { return report_to_json_line(r); });

  m.def(
      "solve_world",
      [](const WorldFile& f, const RunConfig& config, LineRepresentation representation,
         SolverKind solver, std::uint64_t seed) {
        return run_on_observations(f.world, f.observations, config, representation, solver, seed);
      },
      py::arg("world"), py::arg("config"), py::arg("representation"), py::arg("solver"),
      py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("run_cell", &run_cell, py::arg("config"), py::arg("representation"), py::arg("solver"),
        py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def("run_benchmark", &run_benchmark, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  // Metrics ----------------------------------------------------------------

  m.def(
      "ate_rmse",
      [](const std::vector<CameraPose>& est, const std::vector<CameraPose>& truth, bool align) {
        return ate_rmse(Trajectory::from_poses(est), Trajectory::from_poses(truth), align);
      },
      py::arg("estimate"), py::arg("truth"), py::arg("align") = true);
  m.def(
      "rpe",
      [](const std::vector<CameraPose>& est, const std::vector<CameraPose>& truth, int delta) {
        RpeResult r = rpe(Trajectory::from_poses(est), Trajectory::from_poses(truth), delta);
        return std::make_pair(r.translation_rmse, r.rotation_rmse);
      },
      py::arg("estimate"), py::arg("truth"), py::arg("delta") = 1);

  m.def(
      "check_jacobians",
      [](int configurations, std::uint64_t seed) {
        JacobianCheckOptions opt;
        opt.configurations = configurations;
        opt.seed = seed;
        std::vector<std::pair<std::string, double>> out;
        for (const auto& b : run_jacobian_checks(opt)) out.emplace_back(b.name, b.max_relative_error);
        return out;
      },
      py::arg("configurations") = 500, py::arg("seed") = 1);
}
