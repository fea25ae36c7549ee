#include "lineba/marginalization.h"

#include <algorithm>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "internal.h"

namespace lineba {

namespace {

// Moves every feature anchored in `frame` to its next observing keyframe and
// removes all observations made in `frame`.
void drop_frame_observations(FactorGraph& graph, SlidingWindowState& state, FrameId frame) {
  auto window_order = [&](FrameId id) { return state.index_of(id); };

  std::map<FeatureId, const PointObservation*> next_point_anchor;
  for (const auto& o : graph.points) {
    if (o.frame_id == frame || !state.contains(o.frame_id)) continue;
    auto& slot = next_point_anchor[o.feature];
    if (slot == nullptr || window_order(o.frame_id) < window_order(slot->frame_id)) slot = &o;
  }
  std::map<FeatureId, const LineFactor*> next_line_anchor;
  for (const auto& f : graph.lines) {
    if (f.obs.frame_id == frame || !state.contains(f.obs.frame_id)) continue;
    auto& slot = next_line_anchor[f.feature];
    if (slot == nullptr || window_order(f.obs.frame_id) < window_order(slot->obs.frame_id)) {
      slot = &f;
    }
  }

  std::set<FeatureId> dropped_points;
  for (auto& [id, p] : state.points) {
    if (p.anchor_frame != frame) continue;
    const auto it = next_point_anchor.find(id);
    if (it == next_point_anchor.end()) {
      dropped_points.insert(id);
      continue;
    }
    const Vec3 world = state.camera_pose(frame) * (p.anchor_pixel.homogeneous() / p.inv_depth);
    const Vec3 local = state.camera_pose(it->second->frame_id).inverse() * world;
    if (!(local.z() > 0.0)) {
      dropped_points.insert(id);
      continue;
    }
    p.anchor_frame = it->second->frame_id;
    p.anchor_pixel = it->second->pixel;
    p.inv_depth = 1.0 / local.z();
  }

  std::set<FeatureId> dropped_lines;
  for (auto& [id, line] : state.lines) {
    if (line.anchor_frame != frame) continue;
    const auto it = next_line_anchor.find(id);
    if (it == next_line_anchor.end()) {
      dropped_lines.insert(id);
      continue;
    }
    const LineObservation& obs = it->second->obs;
    const PluckerLine world =
        state.representation == LineRepresentation::kOrthonormal
            ? plucker_from_orthonormal(line.orthonormal)
            : transform_line(plucker_from_inverse_depth(line.inverse_depth),
                             state.camera_pose(frame));
    try {
      const PluckerLine local = invert_transform_line(world, state.camera_pose(obs.frame_id));
      line.inverse_depth = closest_inverse_depth_line(local, obs.s_obs, obs.e_obs);
      line.anchor_frame = obs.frame_id;
    } catch (const Error&) {
      dropped_lines.insert(id);
    }
  }

  for (FeatureId id : dropped_points) state.points.erase(id);
  for (FeatureId id : dropped_lines) state.lines.erase(id);
  std::erase_if(graph.points, [&](const PointObservation& o) {
    return o.frame_id == frame || dropped_points.contains(o.feature);
  });
  std::erase_if(graph.lines, [&](const LineFactor& f) {
    return f.obs.frame_id == frame || dropped_lines.contains(f.feature);
  });
}

}  // namespace

WindowUpdate marginalize_frame(const FactorGraph& graph, const SlidingWindowState& state,
                               FrameId frame) {
  check_consistency(graph, state);
  if (!state.contains(frame)) {
    throw Error(ErrorKind::kMissingState, "frame " + std::to_string(frame));
  }
  WindowUpdate out{graph, state, true};

  // Variable ordering: eliminated frame first, then retained frames in
  // window order.
  std::set<FrameId> involved{frame};
  std::vector<const OdometryFactor*> odometry;
  for (const auto& f : graph.odometry) {
    if (f.frame_i == frame || f.frame_j == frame) {
      odometry.push_back(&f);
      involved.insert(f.frame_i);
      involved.insert(f.frame_j);
    }
  }
  for (FrameId id : state.prior.frames) involved.insert(id);

  std::vector<FrameId> retained;
  for (const auto& kf : state.keyframes) {
    if (kf.id != frame && involved.contains(kf.id)) retained.push_back(kf.id);
  }
  std::map<FrameId, int> column;
  column[frame] = 0;
  for (std::size_t k = 0; k < retained.size(); ++k) column[retained[k]] = 6 * (k + 1);
  const int dim = 6 * static_cast<int>(retained.size() + 1);

  // Quadratic model sum |r + J dx|^2 = c + 2 b^T dx + dx^T H dx.
  MatX H = MatX::Zero(dim, dim);
  VecX b = VecX::Zero(dim);
  double c = 0.0;
  auto add = [&](const VecX& r, const std::vector<std::pair<FrameId, MatX>>& blocks) {
    c += r.squaredNorm();
    for (const auto& [fi, ji] : blocks) {
      const int oi = column.at(fi);
      b.segment(oi, 6) += ji.transpose() * r;
      for (const auto& [fj, jj] : blocks) {
        H.block(column.at(fj), oi, 6, 6) += jj.transpose() * ji;
      }
    }
  };

  if (!state.prior.empty()) {
    const detail::PriorEval prior = detail::evaluate_prior(state.prior, state, true);
    std::vector<std::pair<FrameId, MatX>> blocks;
    for (std::size_t k = 0; k < state.prior.frames.size(); ++k) {
      blocks.emplace_back(state.prior.frames[k], prior.jacobians[k]);
    }
    add(prior.residual, blocks);
    c += state.prior.constant_cost;
  }
  for (const OdometryFactor* f : odometry) {
    const OdometryJacobians j =
        odometry_jacobians(*f, state.pose(f->frame_i), state.pose(f->frame_j));
    add(j.residual, {{f->frame_i, j.d_pose_i}, {f->frame_j, j.d_pose_j}});
  }

  const int r_dim = dim - 6;
  MatX H_marg = H.bottomRightCorner(r_dim, r_dim);
  VecX b_marg = b.tail(r_dim);
  double c_marg = c;
  const bool gauge_anchor = state.prior.empty() && state.keyframes.front().id == frame;
  if (!gauge_anchor) {
    // Symmetrized pseudo-inverse of the eliminated block.
    const Mat6 H_mm = 0.5 * (H.topLeftCorner<6, 6>() + H.topLeftCorner<6, 6>().transpose());
    Eigen::SelfAdjointEigenSolver<Mat6> es(H_mm);
    const Vec6 ev = es.eigenvalues();
    const double cut = 1e-12 * std::max(ev.maxCoeff(), 1e-300);
    Vec6 inv_ev = Vec6::Zero();
    for (int k = 0; k < 6; ++k) {
      if (ev[k] > cut) inv_ev[k] = 1.0 / ev[k];
    }
    const Mat6 H_mm_inv = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
    const MatX H_rm = H.bottomLeftCorner(r_dim, 6);
    H_marg -= H_rm * H_mm_inv * H_rm.transpose();
    b_marg -= H_rm * H_mm_inv * b.head<6>();
    c_marg -= b.head<6>().dot(H_mm_inv * b.head<6>());
  }

  MarginalPrior prior;
  if (r_dim > 0) {
    H_marg = 0.5 * (H_marg + H_marg.transpose());
    Eigen::SelfAdjointEigenSolver<MatX> es(H_marg);
    const VecX ev = es.eigenvalues();
    const double cut = 1e-12 * std::max(ev.maxCoeff(), 1e-300);
    std::vector<int> keep;
    for (int k = 0; k < ev.size(); ++k) {
      if (ev[k] > cut) keep.push_back(k);
    }
    prior.J_p = MatX::Zero(static_cast<int>(keep.size()), r_dim);
    prior.r_p = VecX::Zero(static_cast<int>(keep.size()));
    for (std::size_t row = 0; row < keep.size(); ++row) {
      const double s = std::sqrt(ev[keep[row]]);
      const VecX v = es.eigenvectors().col(keep[row]);
      prior.J_p.row(row) = s * v.transpose();
      prior.r_p[row] = v.dot(b_marg) / s;
    }
    prior.constant_cost = c_marg - prior.r_p.squaredNorm();
    prior.frames = retained;
    for (FrameId id : retained) prior.linearization_point.push_back(state.pose(id));
  }
  // Only a prior that constrains something is kept.
  if (prior.J_p.rows() > 0) {
    out.state.prior = std::move(prior);
  } else {
    out.state.prior = MarginalPrior{};
  }

  std::erase_if(out.graph.odometry, [&](const OdometryFactor& f) {
    return f.frame_i == frame || f.frame_j == frame;
  });
  drop_frame_observations(out.graph, out.state, frame);
  out.state.keyframes.erase(out.state.keyframes.begin() + out.state.index_of(frame));
  return out;
}

WindowUpdate marginalize_oldest(const FactorGraph& graph, const SlidingWindowState& state) {
  if (state.keyframes.size() < std::max<std::size_t>(state.max_keyframes, 2)) {
    return {graph, state, false};
  }
  return marginalize_frame(graph, state, state.keyframes.front().id);
}

Mat6 sqrt_information_from_covariance(const Mat6& covariance) {
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (covariance + covariance.transpose()));
  const Vec6 inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

Mat6 covariance_from_sqrt_information(const Mat6& sqrt_info) {
  return (sqrt_info.transpose() * sqrt_info).inverse();
}

OdometryFactor compose_odometry(const OdometryFactor& ab, const OdometryFactor& bc) {
  if (ab.frame_j != bc.frame_i) {
    throw Error(ErrorKind::kInvalidArgument, "odometry factors do not chain");
  }
  OdometryFactor out;
  out.frame_i = ab.frame_i;
  out.frame_j = bc.frame_j;
  out.rel_pose_meas = ab.rel_pose_meas * bc.rel_pose_meas;

  // Noise enters each measurement in its local frame.
  const Mat3 r_bc_t = bc.rel_pose_meas.R.transpose();
  Mat6 a = Mat6::Zero();
  a.block<3, 3>(0, 0) = r_bc_t;
  a.block<3, 3>(0, 3) = -r_bc_t * so3::hat(bc.rel_pose_meas.t);
  a.block<3, 3>(3, 3) = r_bc_t;
  const Mat6 cov = a * covariance_from_sqrt_information(ab.sqrt_info) * a.transpose() +
                   covariance_from_sqrt_information(bc.sqrt_info);
  out.sqrt_info = sqrt_information_from_covariance(cov);
  return out;
}

const char* to_string(WindowAction action) {
  switch (action) {
    case WindowAction::kNone: return "none";
    case WindowAction::kMarginalizedOldest: return "marginalized-oldest";
    case WindowAction::kDroppedSecondNewest: return "dropped-second-newest";
  }
  return "unknown";
}

PolicyResult second_newest_policy(const FactorGraph& graph, const SlidingWindowState& state,
                                  bool is_keyframe) {
  PolicyResult out{graph, state, WindowAction::kNone};
  const std::size_t n = state.keyframes.size();
  if (is_keyframe) {
    if (n > state.max_keyframes) {
      WindowUpdate upd = marginalize_frame(graph, state, state.keyframes.front().id);
      out.graph = std::move(upd.graph);
      out.state = std::move(upd.state);
      out.action = WindowAction::kMarginalizedOldest;
    }
    return out;
  }
  if (n < 3) return out;
  const FrameId second = state.keyframes[n - 2].id;
  if (state.prior.involves(second)) {
    WindowUpdate upd = marginalize_frame(graph, state, second);
    out.graph = std::move(upd.graph);
    out.state = std::move(upd.state);
    out.action = WindowAction::kDroppedSecondNewest;
    return out;
  }

  const OdometryFactor* into = nullptr;
  const OdometryFactor* from = nullptr;
  for (const auto& f : graph.odometry) {
    if (f.frame_j == second && f.frame_i == state.keyframes[n - 3].id) into = &f;
    if (f.frame_i == second && f.frame_j == state.keyframes[n - 1].id) from = &f;
  }
  std::optional<OdometryFactor> composed;
  if (into != nullptr && from != nullptr) composed = compose_odometry(*into, *from);

  std::erase_if(out.graph.odometry, [&](const OdometryFactor& f) {
    return f.frame_i == second || f.frame_j == second;
  });
  if (composed) out.graph.odometry.push_back(*composed);
  drop_frame_observations(out.graph, out.state, second);
  out.state.keyframes.erase(out.state.keyframes.begin() + out.state.index_of(second));
  out.action = WindowAction::kDroppedSecondNewest;
  return out;
}

}  // namespace lineba
