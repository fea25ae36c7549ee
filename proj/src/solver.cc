#include "lineba/solver.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "internal.h"

namespace lineba {

namespace detail {

PriorEval evaluate_prior(const MarginalPrior& prior, const SlidingWindowState& state,
                         bool with_jacobians) {
  PriorEval out;
  if (prior.empty()) return out;
  VecX delta(prior.dimension());
  for (std::size_t k = 0; k < prior.frames.size(); ++k) {
    delta.segment<6>(6 * k) = prior.linearization_point[k].minus(state.pose(prior.frames[k]));
  }
  out.residual = prior.r_p + prior.J_p * delta;
  out.cost = out.residual.squaredNorm() + prior.constant_cost;
  if (with_jacobians) {
    for (std::size_t k = 0; k < prior.frames.size(); ++k) {
      MatX block = prior.J_p.middleCols(6 * k, 6);
      block.rightCols(3) =
          block.rightCols(3) * so3::right_jacobian_inverse(delta.segment<3>(6 * k + 3));
      out.jacobians.push_back(std::move(block));
    }
  }
  return out;
}

}  // namespace detail

void SolverConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw Error(ErrorKind::kConfig, std::string(name) + " must be positive");
  };
  if (max_iterations <= 0) throw Error(ErrorKind::kConfig, "max_iterations must be positive");
  if (two_step_max_outer <= 0) {
    throw Error(ErrorKind::kConfig, "two_step_max_outer must be positive");
  }
  positive(lm_initial_damping, "lm_initial_damping");
  positive(lm_damping_up, "lm_damping_up");
  positive(lm_damping_down, "lm_damping_down");
  positive(cauchy_scale, "cauchy_scale");
  positive(convergence_tol_cost, "convergence_tol_cost");
  positive(convergence_tol_step, "convergence_tol_step");
  if (convergence_tol_cost >= 1.0 || convergence_tol_step >= 1.0) {
    throw Error(ErrorKind::kConfig, "convergence tolerances must be < 1");
  }
  if (lm_damping_up <= 1.0 || lm_damping_down <= 1.0) {
    throw Error(ErrorKind::kConfig, "damping factors must exceed 1");
  }
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIterations: return "max-iterations";
    case SolveStatus::kDiverged: return "diverged";
  }
  return "unknown";
}

double ConvergenceReport::mean_iteration_seconds() const {
  if (iterations.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& it : iterations) sum += it.line_fit_seconds + it.step_seconds;
  return sum / static_cast<double>(iterations.size());
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kInfinity = std::numeric_limits<double>::infinity();

bool uses_lines(const SlidingWindowState& state) {
  return state.representation != LineRepresentation::kPointOnly;
}

// Anchor observations carry no information for anchored parameterizations.
bool line_factor_active(const LineFactor& f, const SlidingWindowState& state) {
  const auto it = state.lines.find(f.feature);
  if (it == state.lines.end()) return false;
  if (!state.contains(f.obs.frame_id)) return false;
  return state.representation == LineRepresentation::kOrthonormal ||
         f.obs.frame_id != it->second.anchor_frame;
}

bool point_factor_active(const PointObservation& o, const SlidingWindowState& state) {
  const auto it = state.points.find(o.feature);
  return it != state.points.end() && state.contains(o.frame_id) &&
         o.frame_id != it->second.anchor_frame;
}

struct RobustTerm {
  double cost;
  double weight;
};

RobustTerm robustify(double squared_norm, const SolverConfig& config) {
  if (!config.robust_loss) return {squared_norm, 1.0};
  const CauchyLoss loss{config.cauchy_scale};
  return {loss.rho(squared_norm), loss.weight(squared_norm)};
}

bool line_projection_degenerate(const PluckerLine& line_c, const CameraIntrinsics& K,
                                double threshold) {
  const Vec3 l = K.line_projection_matrix() * line_c.n;
  return !(l.head<2>().norm() > threshold * l.norm());
}

// One evaluated line factor. `valid` is false when the factor is deactivated.
struct LineEval {
  bool valid = false;
  Vec2 residual = Vec2::Zero();
  Mat26 d_pose_anchor = Mat26::Zero();
  Mat26 d_pose_obs = Mat26::Zero();
  Mat26 d_extrinsic = Mat26::Zero();
  MatX d_line;
};

PluckerLine observed_line(const LineLandmark& line, const SlidingWindowState& state,
                          FrameId frame) {
  const CameraPose& ext = state.extrinsic;
  if (state.representation == LineRepresentation::kOrthonormal) {
    return invert_transform_line(
        invert_transform_line(plucker_from_orthonormal(line.orthonormal), state.pose(frame)), ext);
  }
  return line_in_observing_frame(plucker_from_inverse_depth(line.inverse_depth),
                                 state.pose(line.anchor_frame), state.pose(frame), ext);
}

LineEval evaluate_line(const LineFactor& f, const LineLandmark& line,
                       const SlidingWindowState& state, const FactorGraph& graph,
                       const SolverConfig& config, bool jacobians) {
  LineEval out;
  const PluckerLine line_c = observed_line(line, state, f.obs.frame_id);
  if (line_projection_degenerate(line_c, graph.intrinsics, config.degenerate_line_threshold)) {
    return out;
  }
  out.valid = true;
  if (!jacobians) {
    out.residual = graph.line_sqrt_info *
                   residual_from_image_line(graph.intrinsics.line_projection_matrix() * line_c.n,
                                            f.obs);
    return out;
  }
  const double w = graph.line_sqrt_info;
  if (state.representation == LineRepresentation::kOrthonormal) {
    const WorldLineJacobians j = world_line_jacobians(line.orthonormal, state.pose(f.obs.frame_id),
                                                      state.extrinsic, f.obs, graph.intrinsics);
    out.residual = w * j.residual;
    out.d_pose_obs = w * j.d_pose_obs;
    out.d_extrinsic = w * j.d_extrinsic;
    out.d_line = w * j.d_orthonormal;
  } else {
    const LineJacobians j =
        line_jacobians(line.inverse_depth, state.pose(line.anchor_frame),
                       state.pose(f.obs.frame_id), state.extrinsic, f.obs, graph.intrinsics);
    out.residual = w * j.residual;
    out.d_pose_anchor = w * j.d_pose_anchor;
    out.d_pose_obs = w * j.d_pose_obs;
    out.d_extrinsic = w * j.d_extrinsic;
    out.d_line = w * j.d_lambda;
  }
  return out;
}

// Accumulates a factor with residual r and Jacobian blocks at given offsets
// (negative offsets are frozen and skipped).
class Accumulator {
 public:
  explicit Accumulator(int dim) : H_(MatX::Zero(dim, dim)), b_(VecX::Zero(dim)) {}

  template <typename Residual>
  void add(const Residual& r, const std::vector<std::pair<int, MatX>>& blocks, double weight) {
    for (const auto& [oi, ji] : blocks) {
      if (oi < 0) continue;
      b_.segment(oi, ji.cols()).noalias() -= weight * ji.transpose() * r;
      for (const auto& [oj, jj] : blocks) {
        if (oj < 0) continue;
        H_.block(oi, oj, ji.cols(), jj.cols()).noalias() += weight * ji.transpose() * jj;
      }
    }
  }

  MatX& H() { return H_; }
  VecX& b() { return b_; }

 private:
  MatX H_;
  VecX b_;
};

int offset_of(const std::map<std::int64_t, int>& offsets, std::int64_t id) {
  const auto it = offsets.find(id);
  return it == offsets.end() ? -1 : it->second;
}

// Robust cost of the factors of one line, used by the line refit.
double line_cost(const std::vector<const LineFactor*>& factors, const LineLandmark& line,
                 const SlidingWindowState& state, const FactorGraph& graph,
                 const SolverConfig& config) {
  double cost = 0.0;
  for (const LineFactor* f : factors) {
    const LineEval e = evaluate_line(*f, line, state, graph, config, false);
    if (e.valid) cost += robustify(e.residual.squaredNorm(), config).cost;
  }
  return cost;
}

}  // namespace

StateLayout make_layout(const FactorGraph& graph, const SlidingWindowState& state,
                        const SolverConfig& config, bool include_lines) {
  StateLayout layout;
  int offset = 0;
  const bool freeze_first = state.prior.empty();
  for (std::size_t k = 0; k < state.keyframes.size(); ++k) {
    if (k == 0 && freeze_first) continue;
    layout.pose_offset[state.keyframes[k].id] = offset;
    offset += 6;
  }
  if (config.optimize_extrinsic) {
    layout.extrinsic_offset = offset;
    offset += 6;
  }
  for (const auto& o : graph.points) {
    if (point_factor_active(o, state) && !layout.point_offset.contains(o.feature)) {
      layout.point_offset[o.feature] = 0;
    }
  }
  for (auto& [id, off] : layout.point_offset) {
    off = offset;
    offset += 1;
  }
  if (include_lines && uses_lines(state)) {
    layout.line_dof = line_dof(state.representation);
    for (const auto& f : graph.lines) {
      // A line is constrained once it is seen outside its anchor frame.
      const auto it = state.lines.find(f.feature);
      if (it == state.lines.end() || !state.contains(f.obs.frame_id)) continue;
      if (f.obs.frame_id != it->second.anchor_frame) layout.line_offset[f.feature] = 0;
    }
    for (auto& [id, off] : layout.line_offset) {
      off = offset;
      offset += layout.line_dof;
    }
  }
  layout.dimension = offset;
  return layout;
}

TotalCost evaluate_cost(const FactorGraph& graph, const SlidingWindowState& state,
                        const SolverConfig& config) {
  check_consistency(graph, state);
  TotalCost cost;
  cost.prior = detail::evaluate_prior(state.prior, state, false).cost;
  for (const auto& f : graph.odometry) {
    cost.odometry += odometry_residual(f, state.pose(f.frame_i), state.pose(f.frame_j)).squaredNorm();
  }
  for (const auto& o : graph.points) {
    if (!point_factor_active(o, state)) continue;
    const PointLandmark& p = state.points.at(o.feature);
    try {
      const Vec2 r = graph.point_sqrt_info *
                     point_residual(p.inv_depth, p.anchor_pixel, state.pose(p.anchor_frame),
                                    state.pose(o.frame_id), state.extrinsic, o.pixel);
      cost.point += robustify(r.squaredNorm(), config).cost;
    } catch (const Error&) {
      cost.point = kInfinity;
    }
  }
  if (uses_lines(state)) {
    for (const auto& f : graph.lines) {
      if (!line_factor_active(f, state)) continue;
      const LineEval e =
          evaluate_line(f, state.lines.at(f.feature), state, graph, config, false);
      if (!e.valid) {
        ++cost.deactivated_line_factors;
        continue;
      }
      cost.line += robustify(e.residual.squaredNorm(), config).cost;
    }
  }
  cost.total = cost.prior + cost.odometry + cost.point + cost.line;
  return cost;
}

NormalEquations build_normal_equations(const FactorGraph& graph, const SlidingWindowState& state,
                                       const SolverConfig& config) {
  return build_normal_equations(graph, state, config, make_layout(graph, state, config));
}

NormalEquations build_normal_equations(const FactorGraph& graph, const SlidingWindowState& state,
                                       const SolverConfig& config, const StateLayout& layout) {
  check_consistency(graph, state);
  Accumulator acc(layout.dimension);
  TotalCost cost;
  const int ext = layout.extrinsic_offset;

  const detail::PriorEval prior = detail::evaluate_prior(state.prior, state, true);
  cost.prior = prior.cost;
  if (!state.prior.empty()) {
    std::vector<std::pair<int, MatX>> blocks;
    for (std::size_t k = 0; k < state.prior.frames.size(); ++k) {
      blocks.emplace_back(offset_of(layout.pose_offset, state.prior.frames[k]),
                          prior.jacobians[k]);
    }
    acc.add(prior.residual, blocks, 1.0);
  }

  for (const auto& f : graph.odometry) {
    const OdometryJacobians j =
        odometry_jacobians(f, state.pose(f.frame_i), state.pose(f.frame_j));
    cost.odometry += j.residual.squaredNorm();
    acc.add(j.residual,
            {{offset_of(layout.pose_offset, f.frame_i), j.d_pose_i},
             {offset_of(layout.pose_offset, f.frame_j), j.d_pose_j}},
            1.0);
  }

  for (const auto& o : graph.points) {
    if (!point_factor_active(o, state)) continue;
    const PointLandmark& p = state.points.at(o.feature);
    PointJacobians j;
    try {
      j = point_jacobians(p.inv_depth, p.anchor_pixel, state.pose(p.anchor_frame),
                          state.pose(o.frame_id), state.extrinsic, o.pixel);
    } catch (const Error&) {
      continue;
    }
    const double w = graph.point_sqrt_info;
    const Vec2 r = w * j.residual;
    const RobustTerm rt = robustify(r.squaredNorm(), config);
    cost.point += rt.cost;
    acc.add(r,
            {{offset_of(layout.pose_offset, p.anchor_frame), w * j.d_pose_anchor},
             {offset_of(layout.pose_offset, o.frame_id), w * j.d_pose_obs},
             {ext, w * j.d_extrinsic},
             {offset_of(layout.point_offset, o.feature), w * j.d_inv_depth}},
            rt.weight);
  }

  if (uses_lines(state)) {
    for (const auto& f : graph.lines) {
      if (!line_factor_active(f, state)) continue;
      const LineLandmark& line = state.lines.at(f.feature);
      const LineEval e = evaluate_line(f, line, state, graph, config, true);
      if (!e.valid) {
        ++cost.deactivated_line_factors;
        continue;
      }
      const RobustTerm rt = robustify(e.residual.squaredNorm(), config);
      cost.line += rt.cost;
      std::vector<std::pair<int, MatX>> blocks{
          {offset_of(layout.pose_offset, f.obs.frame_id), e.d_pose_obs},
          {ext, e.d_extrinsic},
          {offset_of(layout.line_offset, f.feature), e.d_line}};
      if (state.representation == LineRepresentation::kInverseDepth) {
        blocks.emplace_back(offset_of(layout.pose_offset, line.anchor_frame), e.d_pose_anchor);
      }
      acc.add(e.residual, blocks, rt.weight);
    }
  }
  cost.total = cost.prior + cost.odometry + cost.point + cost.line;

  NormalEquations out;
  out.H = std::move(acc.H());
  out.b = std::move(acc.b());
  out.cost = cost;
  out.layout = layout;
  return out;
}

bool apply_increment(const SlidingWindowState& state, const StateLayout& layout, const VecX& dx,
                     SlidingWindowState& out, double min_inverse_depth) {
  if (dx.size() != layout.dimension || !dx.allFinite()) return false;
  SlidingWindowState next = state;
  for (auto& kf : next.keyframes) {
    const int off = offset_of(layout.pose_offset, kf.id);
    if (off >= 0) kf.pose = kf.pose.plus(dx.segment<6>(off));
  }
  if (layout.extrinsic_offset >= 0) {
    next.extrinsic = next.extrinsic.plus(dx.segment<6>(layout.extrinsic_offset));
  }
  const auto clamp = [&](double v) { return std::max(v, min_inverse_depth); };
  for (const auto& [id, off] : layout.point_offset) {
    PointLandmark& p = next.points.at(id);
    p.inv_depth = clamp(p.inv_depth + dx[off]);
  }
  for (const auto& [id, off] : layout.line_offset) {
    LineLandmark& line = next.lines.at(id);
    if (state.representation == LineRepresentation::kOrthonormal) {
      line.orthonormal = line.orthonormal.plus(dx.segment<4>(off));
    } else {
      line.inverse_depth = line.inverse_depth.with_inverse_depths(
          clamp(line.inverse_depth.lambda_s() + dx[off]),
          clamp(line.inverse_depth.lambda_e() + dx[off + 1]));
    }
  }
  out = std::move(next);
  return true;
}

namespace {

struct StepOutcome {
  bool accepted = false;
  bool solve_failed = false;
  SlidingWindowState state;
  TotalCost cost;
  int attempts = 0;
  double step_norm = 0.0;
  int dimension = 0;
};

enum class StepKind {
  kJoint,         // all free blocks
  kFixedLines,    // line columns left out
  kReducedLines,  // line columns eliminated from H, lines still held fixed
};

// Pose-step systems over the non-line blocks. The first has every line block
// eliminated by Schur complement, the second simply drops the line columns.
// Lines occupy the trailing columns of the full layout and each line couples
// only to itself.
std::vector<NormalEquations> line_reduced_equations(const FactorGraph& graph,
                                                    const SlidingWindowState& state,
                                                    const SolverConfig& config) {
  const StateLayout full = make_layout(graph, state, config, true);
  const NormalEquations ne = build_normal_equations(graph, state, config, full);
  const int n = full.dimension - full.line_columns();
  StateLayout reduced = full;
  reduced.line_offset.clear();
  reduced.line_dof = 0;
  reduced.dimension = n;

  NormalEquations plain{ne.H.topLeftCorner(n, n), ne.b.head(n), ne.cost, reduced};
  if (full.line_offset.empty()) return {plain};
  const int dof = full.line_dof;
  NormalEquations schur = plain;
  for (const auto& [id, off] : full.line_offset) {
    const MatX c = ne.H.block(off, off, dof, dof);
    Eigen::LDLT<MatX> ldlt(c);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) continue;
    const MatX bl = ne.H.block(0, off, n, dof);
    schur.H.noalias() -= bl * ldlt.solve(bl.transpose());
    schur.b.noalias() -= bl * ldlt.solve(ne.b.segment(off, dof));
  }
  schur.H = 0.5 * (schur.H + schur.H.transpose()).eval();
  return {schur, plain};
}

// One Levenberg-Marquardt step: damping is raised until the cost does not
// increase or the damping limit is hit. With several candidate systems each
// is tried in turn at a given damping.
StepOutcome lm_step(const FactorGraph& graph, const SlidingWindowState& state, double current_cost,
                    const SolverConfig& config, StepKind kind, double& damping) {
  StepOutcome out;
  std::vector<NormalEquations> systems;
  if (kind == StepKind::kReducedLines) {
    systems = line_reduced_equations(graph, state, config);
  } else {
    const StateLayout layout = make_layout(graph, state, config, kind == StepKind::kJoint);
    systems.push_back(build_normal_equations(graph, state, config, layout));
  }
  const StateLayout& layout = systems.front().layout;
  out.dimension = layout.dimension;
  if (layout.dimension == 0) return out;

  bool any_solve = false;
  while (damping <= config.lm_max_damping) {
    ++out.attempts;
    for (const NormalEquations& ne : systems) {
      MatX a = ne.H;
      a.diagonal().array() += damping;
      Eigen::LLT<MatX> llt(a);
      if (llt.info() != Eigen::Success) continue;
      const VecX dx = llt.solve(ne.b);
      if (!dx.allFinite()) continue;
      any_solve = true;
      SlidingWindowState candidate;
      if (!apply_increment(state, layout, dx, candidate, config.init.min_inverse_depth)) continue;
      const TotalCost c = evaluate_cost(graph, candidate, config);
      if (c.total <= current_cost) {
        out.accepted = true;
        out.state = std::move(candidate);
        out.cost = c;
        out.step_norm = dx.norm();
        damping = std::max(damping / config.lm_damping_down, config.lm_min_damping);
        return out;
      }
    }
    damping *= config.lm_damping_up;
  }
  out.solve_failed = !any_solve;
  // A later outer iteration starts over from the initial damping.
  damping = config.lm_initial_damping;
  return out;
}

struct LoopControl {
  bool stop = false;
  SolveStatus status = SolveStatus::kConverged;
};

LoopControl check_convergence(double previous, double current, double step_norm, bool accepted,
                              bool line_fit_moved, const SolverConfig& config) {
  if (!accepted && !line_fit_moved) return {true, SolveStatus::kConverged};
  if (current == 0.0) return {true, SolveStatus::kConverged};
  if (previous - current <= config.convergence_tol_cost * previous) {
    return {true, SolveStatus::kConverged};
  }
  if (accepted && step_norm <= config.convergence_tol_step && !line_fit_moved) {
    return {true, SolveStatus::kConverged};
  }
  return {};
}

int per_line_parameters(const SlidingWindowState& state) { return line_dof(state.representation); }

}  // namespace

SolveResult lm_solve(const FactorGraph& graph, const SlidingWindowState& state,
                     const SolverConfig& config) {
  config.validate();
  const auto start = Clock::now();
  SolveResult result{state, {}};
  ConvergenceReport& report = result.report;
  report.line_parameter_count = per_line_parameters(state);
  report.normal_equation_dimension = make_layout(graph, state, config, true).dimension;

  TotalCost cost = evaluate_cost(graph, state, config);
  report.initial_cost = cost.total;
  double damping = config.lm_initial_damping;
  report.status = SolveStatus::kMaxIterations;
  if (cost.total == 0.0) report.status = SolveStatus::kConverged;

  for (int it = 0; it < config.max_iterations && cost.total > 0.0; ++it) {
    const auto t0 = Clock::now();
    StepOutcome step = lm_step(graph, result.state, cost.total, config, StepKind::kJoint, damping);
    IterationRecord rec;
    rec.iteration = it;
    rec.cost_before = cost.total;
    rec.cost_after_fit = cost.total;
    rec.accepted = step.accepted;
    rec.attempts = step.attempts;
    rec.damping = damping;
    rec.dimension = step.dimension;
    rec.step_norm = step.step_norm;
    rec.step_seconds = seconds_since(t0);
    if (step.solve_failed) {
      rec.cost = cost.total;
      report.iterations.push_back(rec);
      report.status = SolveStatus::kDiverged;
      result.state = state;
      break;
    }
    const double previous = cost.total;
    if (step.accepted) {
      result.state = std::move(step.state);
      cost = step.cost;
    }
    rec.cost = cost.total;
    report.iterations.push_back(rec);
    const LoopControl ctl =
        check_convergence(previous, cost.total, rec.step_norm, step.accepted, false, config);
    if (ctl.stop) {
      report.status = ctl.status;
      break;
    }
  }
  report.final_cost = cost.total;
  report.final_breakdown = report.status == SolveStatus::kDiverged
                               ? evaluate_cost(graph, state, config)
                               : cost;
  if (report.status == SolveStatus::kDiverged) report.final_cost = report.final_breakdown.total;
  report.total_seconds = seconds_since(start);
  return result;
}

SlidingWindowState refit_lines(const FactorGraph& graph, const SlidingWindowState& state,
                               const SolverConfig& config) {
  if (!uses_lines(state) || state.lines.empty()) return state;
  SlidingWindowState out = state;

  std::map<FeatureId, std::vector<const LineFactor*>> factors;
  for (const auto& f : graph.lines) {
    if (line_factor_active(f, state)) factors[f.feature].push_back(&f);
  }
  const bool orthonormal = state.representation == LineRepresentation::kOrthonormal;
  const int dof = line_dof(state.representation);

  for (auto& [id, fs] : factors) {
    LineLandmark& line = out.lines.at(id);
    const CameraPose anchor_cam = out.camera_pose(line.anchor_frame);
    const double start_cost = line_cost(fs, line, out, graph, config);
    LineLandmark best = line;
    double best_cost = start_cost;

    // Plane-distance least squares at the current poses.
    LineTrack track{line.anchor_frame, line.anchor_s(), line.anchor_e(), {}};
    std::vector<CameraPose> rel;
    for (const LineFactor* f : fs) {
      if (f->obs.frame_id == line.anchor_frame) continue;
      track.observations.push_back(f->obs);
      rel.push_back(anchor_cam.inverse() * out.camera_pose(f->obs.frame_id));
    }
    const InverseDepthInit init = init_inverse_depth_multi_view(track, rel, config.init);
    if (init.ok()) {
      LineLandmark candidate = line;
      candidate.inverse_depth = line.inverse_depth.with_inverse_depths(init.lambda_s, init.lambda_e);
      bool usable = true;
      if (orthonormal) {
        try {
          candidate.orthonormal = orthonormal_from_plucker(
              transform_line(plucker_from_inverse_depth(candidate.inverse_depth), anchor_cam));
        } catch (const Error&) {
          usable = false;
        }
      }
      if (usable) {
        const double c = line_cost(fs, candidate, out, graph, config);
        if (c < best_cost) {
          best = candidate;
          best_cost = c;
        }
      }
    }

    // Levenberg-Marquardt on this line's parameters only.
    double damping = config.lm_initial_damping;
    for (int it = 0; it < config.line_fit_max_iterations && best_cost > 0.0; ++it) {
      MatX h = MatX::Zero(dof, dof);
      VecX g = VecX::Zero(dof);
      for (const LineFactor* f : fs) {
        const LineEval e = evaluate_line(*f, best, out, graph, config, true);
        if (!e.valid) continue;
        const double w = robustify(e.residual.squaredNorm(), config).weight;
        h += w * e.d_line.transpose() * e.d_line;
        g -= w * e.d_line.transpose() * e.residual;
      }
      bool improved = false;
      while (damping <= config.lm_max_damping) {
        MatX a = h;
        a.diagonal().array() += damping;
        const VecX dx = a.ldlt().solve(g);
        LineLandmark candidate = best;
        bool valid = dx.allFinite();
        if (valid && orthonormal) {
          candidate.orthonormal = best.orthonormal.plus(dx.head<4>());
        } else if (valid) {
          const double ls = best.inverse_depth.lambda_s() + dx[0];
          const double le = best.inverse_depth.lambda_e() + dx[1];
          valid = ls > 0.0 && le > 0.0;
          if (valid) candidate.inverse_depth = best.inverse_depth.with_inverse_depths(ls, le);
        }
        if (valid) {
          const double c = line_cost(fs, candidate, out, graph, config);
          if (c <= best_cost) {
            const double decrease = best_cost - c;
            best = candidate;
            best_cost = c;
            damping = std::max(damping / config.lm_damping_down, config.lm_min_damping);
            improved = decrease > config.convergence_tol_cost * c;
            break;
          }
        }
        damping *= config.lm_damping_up;
      }
      if (!improved) break;
    }
    if (best_cost <= start_cost) line = best;
  }
  return out;
}

SolveResult two_step_solve(const FactorGraph& graph, const SlidingWindowState& state,
                           const SolverConfig& config) {
  config.validate();
  const auto start = Clock::now();
  SolveResult result{state, {}};
  ConvergenceReport& report = result.report;
  report.line_parameter_count = per_line_parameters(state);
  report.normal_equation_dimension = make_layout(graph, state, config, false).dimension;

  TotalCost cost = evaluate_cost(graph, state, config);
  report.initial_cost = cost.total;
  double damping = config.lm_initial_damping;
  report.status = SolveStatus::kMaxIterations;
  if (cost.total == 0.0) report.status = SolveStatus::kConverged;

  for (int it = 0; it < config.two_step_max_outer && cost.total > 0.0; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    rec.cost_before = cost.total;

    const auto t0 = Clock::now();
    SlidingWindowState fitted = refit_lines(graph, result.state, config);
    const TotalCost fit_cost = evaluate_cost(graph, fitted, config);
    rec.cost_after_fit = fit_cost.total;
    rec.line_fit_seconds = seconds_since(t0);

    const auto t1 = Clock::now();
    const StepKind kind =
        config.two_step_reduced_pose_step ? StepKind::kReducedLines : StepKind::kFixedLines;
    StepOutcome step = lm_step(graph, fitted, fit_cost.total, config, kind, damping);
    rec.step_seconds = seconds_since(t1);
    rec.accepted = step.accepted;
    rec.attempts = step.attempts;
    rec.damping = damping;
    rec.dimension = step.dimension;
    rec.step_norm = step.step_norm;
    if (step.solve_failed) {
      rec.cost = cost.total;
      report.iterations.push_back(rec);
      report.status = SolveStatus::kDiverged;
      result.state = state;
      break;
    }
    const double previous = cost.total;
    const bool fit_moved = fit_cost.total < previous;
    if (step.accepted) {
      result.state = std::move(step.state);
      cost = step.cost;
    } else {
      result.state = std::move(fitted);
      cost = fit_cost;
    }
    rec.cost = cost.total;
    report.iterations.push_back(rec);
    const LoopControl ctl =
        check_convergence(previous, cost.total, rec.step_norm, step.accepted, fit_moved, config);
    if (ctl.stop) {
      report.status = ctl.status;
      break;
    }
  }
  report.final_cost = cost.total;
  report.final_breakdown = report.status == SolveStatus::kDiverged
                               ? evaluate_cost(graph, state, config)
                               : cost;
  if (report.status == SolveStatus::kDiverged) report.final_cost = report.final_breakdown.total;
  report.total_seconds = seconds_since(start);
  return result;
}

SolveResult solve(const FactorGraph& graph, const SlidingWindowState& state,
                  const SolverConfig& config) {
  return config.two_step_enabled ? two_step_solve(graph, state, config)
                                 : lm_solve(graph, state, config);
}

}  // namespace lineba
