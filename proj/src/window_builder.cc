#include "lineba/window_builder.h"

#include <cmath>
#include <map>
#include <set>

namespace lineba {

namespace {

void erase_features(FactorGraph& graph, SlidingWindowState& state,
                    const std::set<FeatureId>& dead_points, const std::set<FeatureId>& dead_lines) {
  for (FeatureId id : dead_points) state.points.erase(id);
  for (FeatureId id : dead_lines) state.lines.erase(id);
  std::erase_if(graph.points,
                [&](const PointObservation& o) { return dead_points.contains(o.feature); });
  std::erase_if(graph.lines, [&](const LineFactor& f) { return dead_lines.contains(f.feature); });
}

}  // namespace

int initialize_features(FactorGraph& graph, SlidingWindowState& state,
                        const FeatureInitOptions& options) {
  std::set<FeatureId> dead_points;
  std::set<FeatureId> dead_lines;

  // Observations grouped per feature, in window order.
  std::map<FeatureId, std::vector<const PointObservation*>> point_obs;
  std::map<FeatureId, std::vector<const LineFactor*>> line_obs;
  for (const auto& o : graph.points) {
    if (state.contains(o.frame_id)) point_obs[o.feature].push_back(&o);
  }
  for (const auto& f : graph.lines) {
    if (state.contains(f.obs.frame_id)) line_obs[f.feature].push_back(&f);
  }
  const auto by_window = [&](FrameId a, FrameId b) { return state.index_of(a) < state.index_of(b); };
  for (auto& [id, list] : point_obs) {
    std::stable_sort(list.begin(), list.end(), [&](auto* a, auto* b) {
      return by_window(a->frame_id, b->frame_id);
    });
  }
  for (auto& [id, list] : line_obs) {
    std::stable_sort(list.begin(), list.end(), [&](auto* a, auto* b) {
      return by_window(a->obs.frame_id, b->obs.frame_id);
    });
  }

  for (auto& [id, point] : state.points) {
    const auto it = point_obs.find(id);
    if (it == point_obs.end() || it->second.size() < 2) {
      dead_points.insert(id);
      continue;
    }
    const auto& list = it->second;
    const PointObservation& anchor = *list.front();
    const CameraPose anchor_inv = state.camera_pose(anchor.frame_id).inverse();
    std::vector<Vec2> pixels;
    std::vector<CameraPose> rel;
    for (std::size_t k = 1; k < list.size(); ++k) {
      if (list[k]->frame_id == anchor.frame_id) continue;
      pixels.push_back(list[k]->pixel);
      rel.push_back(anchor_inv * state.camera_pose(list[k]->frame_id));
    }
    const PointInit init = init_point_inverse_depth(anchor.pixel, pixels, rel, options.init);
    if (init.status != InitStatus::kOk) {
      dead_points.insert(id);
      continue;
    }
    point = {anchor.frame_id, anchor.pixel, init.inv_depth};
    for (const auto* o : list) {
      try {
        point_residual(point.inv_depth, point.anchor_pixel, state.pose(point.anchor_frame),
                       state.pose(o->frame_id), state.extrinsic, o->pixel);
      } catch (const Error&) {
        dead_points.insert(id);
        break;
      }
    }
  }

  for (auto& [id, line] : state.lines) {
    const auto it = line_obs.find(id);
    if (it == line_obs.end() || it->second.size() < 2) {
      dead_lines.insert(id);
      continue;
    }
    const auto& list = it->second;
    const LineObservation& anchor = list.front()->obs;
    const CameraPose anchor_pose = state.camera_pose(anchor.frame_id);
    const CameraPose anchor_inv = anchor_pose.inverse();
    LineTrack track{anchor.frame_id, anchor.s_obs, anchor.e_obs, {}};
    std::vector<CameraPose> rel;
    for (std::size_t k = 1; k < list.size(); ++k) {
      if (list[k]->obs.frame_id == anchor.frame_id) continue;
      track.observations.push_back(list[k]->obs);
      rel.push_back(anchor_inv * state.camera_pose(list[k]->obs.frame_id));
    }
    if (options.min_line_plane_angle > 0.0) {
      const Vec3 anchor_normal =
          Vec3(anchor.s_obs.x(), anchor.s_obs.y(), 1.0).cross(Vec3(anchor.e_obs.x(), anchor.e_obs.y(), 1.0));
      double best = 0.0;
      for (std::size_t k = 0; k < rel.size(); ++k) {
        try {
          const Vec3 n = observation_plane(track.observations[k], rel[k]).normal;
          best = std::max(best, std::atan2(n.cross(anchor_normal).norm(),
                                           std::abs(n.dot(anchor_normal))));
        } catch (const Error&) {
        }
      }
      if (best < options.min_line_plane_angle) {
        dead_lines.insert(id);
        continue;
      }
    }
    InverseDepthInit init;
    try {
      init = init_inverse_depth_multi_view(track, rel, options.init);
    } catch (const Error&) {
      init.status = InitStatus::kInsufficientParallax;
    }
    if (!init.ok()) {
      dead_lines.insert(id);
      continue;
    }
    try {
      const InverseDepthLine inv(init.lambda_s, init.lambda_e, anchor.s_obs, anchor.e_obs);
      line = LineLandmark{anchor.frame_id, inv,
                          orthonormal_from_plucker(
                              transform_line(plucker_from_inverse_depth(inv), anchor_pose))};
    } catch (const Error&) {
      dead_lines.insert(id);
    }
  }

  erase_features(graph, state, dead_points, dead_lines);
  return static_cast<int>(dead_points.size() + dead_lines.size());
}

int prune_unconstrained_features(FactorGraph& graph, SlidingWindowState& state) {
  std::set<FeatureId> constrained_points;
  std::set<FeatureId> constrained_lines;
  for (const auto& o : graph.points) {
    const auto it = state.points.find(o.feature);
    if (it != state.points.end() && state.contains(o.frame_id) &&
        o.frame_id != it->second.anchor_frame) {
      constrained_points.insert(o.feature);
    }
  }
  for (const auto& f : graph.lines) {
    const auto it = state.lines.find(f.feature);
    if (it != state.lines.end() && state.contains(f.obs.frame_id) &&
        f.obs.frame_id != it->second.anchor_frame) {
      constrained_lines.insert(f.feature);
    }
  }
  std::set<FeatureId> dead_points;
  std::set<FeatureId> dead_lines;
  for (const auto& [id, p] : state.points) {
    if (!constrained_points.contains(id)) dead_points.insert(id);
  }
  for (const auto& [id, l] : state.lines) {
    if (!constrained_lines.contains(id)) dead_lines.insert(id);
  }
  // Factors of features that were never in the state go as well.
  for (const auto& o : graph.points) {
    if (!state.points.contains(o.feature)) dead_points.insert(o.feature);
  }
  for (const auto& f : graph.lines) {
    if (!state.lines.contains(f.feature)) dead_lines.insert(f.feature);
  }
  int removed = 0;
  for (FeatureId id : dead_points) removed += state.points.contains(id) ? 1 : 0;
  for (FeatureId id : dead_lines) removed += state.lines.contains(id) ? 1 : 0;
  erase_features(graph, state, dead_points, dead_lines);
  return removed;
}

}  // namespace lineba
