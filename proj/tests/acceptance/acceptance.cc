// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "lineba/harness.h"
#include "lineba/initialization.h"
#include "lineba/jacobian_check.h"
#include "lineba/marginalization.h"
#include "lineba/residuals.h"
#include "../support.h"

namespace {

using namespace lineba;
using testing::Rng;
using testing::uniform;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// One-sided exact sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
double sign_test_p(int wins, int n) {
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                  n * std::log(2.0));
  }
  return p;
}

void criterion_jacobians() {
  const auto t0 = Clock::now();
  JacobianCheckOptions options;
  options.configurations = 500;
  const auto checks = run_jacobian_checks(options);
  const double dt = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  int min_configs = options.configurations;
  for (const auto& c : checks) {
    if (c.max_relative_error > worst) {
      worst = c.max_relative_error;
      worst_name = c.name;
    }
    min_configs = std::min(min_configs, c.configurations);
  }
  verdict(2, !checks.empty() && worst < 1e-5 && min_configs >= 500 && dt < 10.0,
          fmt("%zu blocks x %d configurations, max rel err %.2e (%s), %.2f s", checks.size(),
              min_configs, worst, worst_name.c_str(), dt));
}

void criterion_round_trips() {
  const auto t0 = Clock::now();
  Rng rng(3);
  double worst_ortho = 0.0, worst_inv = 0.0;
  int n = 0;
  while (n < 1000) {
    const Vec3 s(uniform(rng, -3, 3), uniform(rng, -2, 2), uniform(rng, 2, 10));
    const Vec3 e(uniform(rng, -3, 3), uniform(rng, -2, 2), uniform(rng, 2, 10));
    if ((s.hnormalized() - e.hnormalized()).norm() < 1e-3) continue;
    const PluckerLine line = PluckerLine::through(s, e);
    worst_ortho = std::max(
        worst_ortho, testing::line_error(plucker_from_orthonormal(orthonormal_from_plucker(line)), line));
    const InverseDepthLine inv = inverse_depth_from_plucker(line, s.hnormalized(), e.hnormalized());
    worst_inv = std::max(worst_inv, testing::line_error(plucker_from_inverse_depth(inv), line));
    ++n;
  }
  const double dt = seconds_since(t0);
  verdict(3, worst_ortho < 1e-9 && worst_inv < 1e-9 && dt < 5.0,
          fmt("%d lines, orthonormal %.2e, inverse-depth %.2e, %.3f s", n, worst_ortho, worst_inv,
              dt));
}

void criterion_resampling() {
  int cases = 0, resampled = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; cases < 1000; ++seed) {
    const SyntheticWorld world = generate_world({}, {}, seed);
    NoiseConfig noise;
    noise.endpoint_resample = true;
    noise.seed = seed + 1000;
    const ObservationSet obs = observe(world, noise);
    const SlidingWindowState gt = ground_truth_state(world, obs, LineRepresentation::kInverseDepth);
    for (const auto& frame : obs.frames) {
      for (const auto& f : frame.lines) {
        const auto it = gt.lines.find(f.feature);
        if (it == gt.lines.end() || it->second.anchor_frame == f.obs.frame_id) continue;
        const LineLandmark& l = it->second;
        const Vec2 r = line_residual(l.inverse_depth, gt.pose(l.anchor_frame), gt.pose(f.obs.frame_id),
                                     gt.extrinsic, f.obs, CameraIntrinsics::unit());
        worst = std::max(worst, r.norm());
        // Endpoints differ from the reprojected anchor endpoints.
        const Vec3 s_local = gt.camera_pose(f.obs.frame_id).inverse() *
                             (gt.camera_pose(l.anchor_frame) * l.inverse_depth.start_point());
        if ((s_local.hnormalized() - f.obs.s_obs).norm() > 1e-6) ++resampled;
        ++cases;
      }
    }
  }
  verdict(4, worst < 1e-10 && resampled > cases / 2,
          fmt("%d observations (%d with resampled endpoints), max |r| %.2e", cases, resampled,
              worst));
}

Vec2 project(const CameraPose& rel, const Vec3& p) {
  return (rel.R.transpose() * (p - rel.t)).hnormalized();
}

LineObservation view_of(Rng& rng, const Vec3& s, const Vec3& e, const CameraPose& rel,
                        FrameId id) {
  const double a = uniform(rng, -0.2, 0.3);
  const double b = uniform(rng, 0.7, 1.2);
  return {id, project(rel, s + a * (e - s)), project(rel, s + b * (e - s))};
}

void criterion_initialization() {
  Rng rng(5);
  int recovered = 0, trials = 0;
  double worst = 0.0;
  int signaled = 0, bad_direction = 0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    Vec3 s, e;
    do {
      s = Vec3(uniform(rng, -2, 2), uniform(rng, -1.5, 1.5), uniform(rng, 3, 7));
      e = Vec3(uniform(rng, -2, 2), uniform(rng, -1.5, 1.5), uniform(rng, 3, 7));
    } while ((s.hnormalized() - e.hnormalized()).norm() < 0.2);
    LineTrack track{0, s.hnormalized(), e.hnormalized(), {}};

    // Multi-view, translated views.
    std::vector<CameraPose> rels;
    for (int k = 0; k < 4; ++k) {
      const CameraPose rel{testing::small_rotation(rng, 0.1),
                           testing::uniform_vec3(rng, -1, 1).normalized() * 0.5};
      track.observations.push_back(view_of(rng, s, e, rel, k + 1));
      rels.push_back(rel);
    }
    const InverseDepthInit init = init_inverse_depth_multi_view(track, rels);
    ++trials;
    if (init.ok()) {
      ++recovered;
      worst = std::max({worst, std::abs(init.lambda_s * s.z() - 1.0),
                        std::abs(init.lambda_e * e.z() - 1.0)});
    }

    // Rotation only: the plane method must refuse, the dual Plücker matrix
    // still returns a line.
    LineTrack rot{0, s.hnormalized(), e.hnormalized(), {}};
    const CameraPose rel{testing::small_rotation(rng, 0.15), Vec3::Zero()};
    rot.observations.push_back(view_of(rng, s, e, rel, 1));
    if (init_inverse_depth_two_view(rot, rel).status == InitStatus::kRotationOnlyDegenerate) {
      ++signaled;
    }
    const PluckerLine baseline = init_plucker_matrix(rot, rel);
    double angle = std::numbers::pi / 2;
    if (baseline.d.norm() > 0.0) {
      angle = std::acos(std::min(1.0, std::abs(baseline.d.normalized().dot((e - s).normalized()))));
    }
    if (angle > 0.1) ++bad_direction;
  }
  verdict(5, recovered == trials && worst < 1e-8 && signaled == n && 2 * bad_direction >= n,
          fmt("multi-view %d/%d recovered, max rel err %.2e; rotation-only signaled %d/%d, "
              "baseline direction > 0.1 rad in %d/%d",
              recovered, trials, worst, signaled, n, bad_direction, n));
}

WindowProblem window_problem(std::uint64_t seed, double pixel_sigma, LineRepresentation rep) {
  const SyntheticWorld w = generate_world({}, {}, seed);
  NoiseConfig noise;
  noise.pixel_sigma = pixel_sigma;
  noise.seed = seed + 100;
  return make_window_problem(w, observe(w, noise), rep);
}

void criterion_inequality_chain() {
  const auto t0 = Clock::now();
  int good_windows = 0, iterations = 0;
  SolverConfig config;
  config.two_step_max_outer = 30;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const WindowProblem p = window_problem(seed, 1.0, LineRepresentation::kInverseDepth);
    const SlidingWindowState start = perturb_state(p.ground_truth, {0.02, 0.05, 0.1}, seed);
    const SolveResult r = two_step_solve(p.graph, start, config);
    bool ok = r.report.status != SolveStatus::kDiverged && !r.report.iterations.empty();
    for (const auto& it : r.report.iterations) {
      ok = ok && 0.0 <= it.cost && it.cost <= it.cost_after_fit && it.cost_after_fit <= it.cost_before;
      ++iterations;
    }
    if (ok) ++good_windows;
  }
  verdict(6, good_windows == 100,
          fmt("%d/100 noisy windows, %d outer iterations checked, %.1f s", good_windows, iterations,
              seconds_since(t0)));
}

void criterion_end_to_end() {
  const auto t0 = Clock::now();
  // Noiseless: every representation and solver from a perturbed start.
  RunConfig clean;
  clean.initial_poses = InitialPoses::kPerturbedTruth;
  clean.perturbation = {0.02, 0.05, 0.1};
  double worst_clean = 0.0;
  int clean_runs = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (LineRepresentation rep : clean.representations) {
      for (SolverKind solver : clean.solvers) {
        const RunReport r = run_cell(clean, rep, solver, seed);
        worst_clean = std::max(worst_clean, ate_rmse(r.estimate, r.truth, false));
        ++clean_runs;
      }
    }
  }

  // One pixel of noise, odometry start.
  RunConfig noisy;
  noisy.noise.pixel_sigma = 1.0;
  noisy.noise.odometry_translation_sigma = 0.01;
  noisy.noise.odometry_rotation_sigma = 0.005;
  noisy.representations = {LineRepresentation::kInverseDepth, LineRepresentation::kPointOnly};
  noisy.solvers = {SolverKind::kJoint};
  noisy.n_seeds = 50;
  const std::vector<RunReport> reports = run_benchmark(noisy);
  std::vector<double> with_lines, points_only;
  int wins = 0;
  for (std::size_t i = 0; i + 1 < reports.size(); i += 2) {
    with_lines.push_back(reports[i].ate_rmse);
    points_only.push_back(reports[i + 1].ate_rmse);
    if (reports[i].ate_rmse < reports[i + 1].ate_rmse) ++wins;
  }
  const int n = static_cast<int>(with_lines.size());
  const double p = sign_test_p(wins, n);
  const double m_lines = median(with_lines), m_points = median(points_only);
  const double dt = seconds_since(t0);
  verdict(7,
          worst_clean < 1e-6 && n == 50 && m_lines < m_points && p < 0.05 && dt < 120.0,
          fmt("noiseless %d runs, max gauge-fixed ATE %.2e; noisy median ATE %.4f (points+lines) vs "
              "%.4f (points), wins %d/%d, sign test p=%.1e, %.1f s",
              clean_runs, worst_clean, m_lines, m_points, wins, n, p, dt));
}

void criterion_dimensions() {
  bool ok = true;
  std::string detail;
  double joint_ms = 0.0, two_ms = 0.0;
  const int seeds = 5;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const WindowProblem inv = window_problem(seed, 1.0, LineRepresentation::kInverseDepth);
    const SlidingWindowState start = perturb_state(inv.ground_truth, {0.02, 0.05, 0.1}, seed);
    SlidingWindowState start_ortho = start;
    start_ortho.set_representation(LineRepresentation::kOrthonormal);
    SolverConfig config;
    config.max_iterations = 20;
    config.two_step_max_outer = 20;
    const SolveResult ji = lm_solve(inv.graph, start, config);
    const SolveResult jo = lm_solve(inv.graph, start_ortho, config);
    const SolveResult ti = two_step_solve(inv.graph, start, config);
    const int n_lines = static_cast<int>(start.lines.size());
    const StateLayout with_lines = make_layout(inv.graph, start, config, true);
    ok = ok && ji.report.line_parameter_count == 2 && jo.report.line_parameter_count == 4 &&
         jo.report.normal_equation_dimension - ji.report.normal_equation_dimension == 2 * n_lines &&
         ji.report.normal_equation_dimension - ti.report.normal_equation_dimension ==
             with_lines.line_columns();
    for (const auto& it : ti.report.iterations) {
      ok = ok && it.dimension == ti.report.normal_equation_dimension;
    }
    if (seed == 0) {
      detail = fmt("per line 2 vs 4; %d lines: joint dim %d (inv-depth) vs %d (orthonormal), "
                   "two-step dim %d",
                   n_lines, ji.report.normal_equation_dimension, jo.report.normal_equation_dimension,
                   ti.report.normal_equation_dimension);
    }
    joint_ms += 1e3 * ji.report.mean_iteration_seconds() / seeds;
    two_ms += 1e3 * ti.report.mean_iteration_seconds() / seeds;
  }
  verdict(8, ok, detail);
  std::printf("  report: per-iteration wall clock two-step %.2f ms vs joint %.2f ms "
              "(reference 36.4 vs 46 ms; not a pass criterion)\n",
              two_ms, joint_ms);
}

Mat6 random_sqrt_info(Rng& rng) {
  Mat6 s = Mat6::Zero();
  for (int r = 0; r < 6; ++r) {
    s(r, r) = uniform(rng, 5.0, 20.0);
    for (int c = r + 1; c < 6; ++c) s(r, c) = uniform(rng, -1.0, 1.0);
  }
  return s;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

void criterion_marginalization() {
  // Two frames, prior A on frame 0, exact odometry 0 -> 1 with weight S.
  Rng rng(9);
  double worst_oracle = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const CameraPose p0 = testing::random_pose(rng, 2.0), p1 = testing::random_pose(rng, 2.0);
    const Mat6 S = random_sqrt_info(rng), A = random_sqrt_info(rng);
    SlidingWindowState state;
    state.keyframes = {{0, p0}, {1, p1}};
    state.prior.frames = {0};
    state.prior.linearization_point = {p0};
    state.prior.J_p = A;
    state.prior.r_p = VecX::Zero(6);
    FactorGraph graph;
    graph.odometry.push_back({0, 1, p0.inverse() * p1, S});

    const Mat3 rm = p0.R.transpose() * p1.R;
    const Vec3 dt = p0.R.transpose() * (p1.t - p0.t);
    Mat6 ji = Mat6::Zero(), jj = Mat6::Zero();
    ji.block<3, 3>(0, 0) = -rm.transpose() * p0.R.transpose();
    ji.block<3, 3>(0, 3) = rm.transpose() * skew(dt);
    ji.block<3, 3>(3, 3) = -rm.transpose();
    jj.block<3, 3>(0, 0) = rm.transpose() * p0.R.transpose();
    jj.block<3, 3>(3, 3) = Mat3::Identity();
    ji = S * ji;
    jj = S * jj;
    const Mat6 h00 = A.transpose() * A + ji.transpose() * ji;
    const Mat6 h01 = ji.transpose() * jj;
    const Mat6 expected = jj.transpose() * jj - h01.transpose() * h00.inverse() * h01;

    const WindowUpdate u = marginalize_frame(graph, state, 0);
    const MatX got = u.state.prior.J_p.transpose() * u.state.prior.J_p;
    worst_oracle = std::max(worst_oracle, (got - expected).norm() / expected.norm());
  }

  // Frame 0 with odometry and a prior only; solve the full window, then
  // marginalize near the optimum and solve the reduced one.
  double worst_agreement = 0.0;
  SolverConfig config;
  config.max_iterations = 100;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticWorld w = generate_world({}, {}, seed);
    NoiseConfig noise;
    noise.pixel_sigma = 1.0;
    noise.odometry_translation_sigma = 0.01;
    noise.odometry_rotation_sigma = 0.005;
    noise.seed = seed + 11;
    ObservationSet obs = observe(w, noise);
    obs.frames[0].points.clear();
    obs.frames[0].lines.clear();
    WindowProblem p = make_window_problem(w, obs, LineRepresentation::kInverseDepth);
    p.ground_truth.prior.frames = {0};
    p.ground_truth.prior.linearization_point = {p.ground_truth.keyframes[0].pose};
    p.ground_truth.prior.J_p = MatX::Identity(6, 6) * 100.0;
    p.ground_truth.prior.r_p = VecX::Zero(6);
    const SolveResult full = lm_solve(p.graph, p.ground_truth, config);
    SlidingWindowState lin = perturb_state(full.state, {1e-5, 1e-5, 0.0}, seed + 50);
    lin.keyframes[0].pose = lin.keyframes[0].pose.plus(Vec6::Constant(1e-5));
    const WindowUpdate u = marginalize_frame(p.graph, lin, 0);
    const SolveResult reduced = lm_solve(u.graph, u.state, config);
    for (const auto& kf : reduced.state.keyframes) {
      worst_agreement = std::max(worst_agreement, full.state.pose(kf.id).minus(kf.pose).norm());
    }
  }
  verdict(9, worst_oracle < 1e-10 && worst_agreement < 1e-6,
          fmt("Schur complement vs hand oracle %.2e (50 cases); reduced vs full pose gap %.2e "
              "(5 windows)",
              worst_oracle, worst_agreement));
}

}  // namespace

int main() {
  std::printf("criterion 1: NOT REPRODUCIBLE  real-dataset trajectory tables need a camera/IMU "
              "front end; property checks below stand in\n");
  std::fflush(stdout);
  criterion_jacobians();
  criterion_round_trips();
  criterion_resampling();
  criterion_initialization();
  criterion_inequality_chain();
  criterion_end_to_end();
  criterion_dimensions();
  criterion_marginalization();
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
