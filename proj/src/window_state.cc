#include "lineba/window_state.h"

#include <algorithm>
#include <set>

namespace lineba {

const char* to_string(LineRepresentation representation) {
  switch (representation) {
    case LineRepresentation::kInverseDepth: return "inv-depth";
    case LineRepresentation::kOrthonormal: return "orthonormal";
    case LineRepresentation::kPointOnly: return "point-only";
  }
  return "unknown";
}

std::optional<LineRepresentation> parse_line_representation(const std::string& text) {
  if (text == "inv-depth") return LineRepresentation::kInverseDepth;
  if (text == "orthonormal") return LineRepresentation::kOrthonormal;
  if (text == "point-only") return LineRepresentation::kPointOnly;
  return std::nullopt;
}

int line_dof(LineRepresentation representation) {
  switch (representation) {
    case LineRepresentation::kInverseDepth: return 2;
    case LineRepresentation::kOrthonormal: return 4;
    case LineRepresentation::kPointOnly: return 0;
  }
  return 0;
}

bool MarginalPrior::involves(FrameId id) const {
  return std::find(frames.begin(), frames.end(), id) != frames.end();
}

int SlidingWindowState::index_of(FrameId id) const {
  for (std::size_t k = 0; k < keyframes.size(); ++k) {
    if (keyframes[k].id == id) return static_cast<int>(k);
  }
  return -1;
}

const CameraPose& SlidingWindowState::pose(FrameId id) const {
  const int k = index_of(id);
  if (k < 0) throw Error(ErrorKind::kMissingState, "frame " + std::to_string(id));
  return keyframes[k].pose;
}

CameraPose& SlidingWindowState::pose(FrameId id) {
  const int k = index_of(id);
  if (k < 0) throw Error(ErrorKind::kMissingState, "frame " + std::to_string(id));
  return keyframes[k].pose;
}

void SlidingWindowState::set_representation(LineRepresentation target) {
  if (target == representation) return;
  if (target == LineRepresentation::kOrthonormal) {
    for (auto& [id, line] : lines) {
      const PluckerLine world = transform_line(plucker_from_inverse_depth(line.inverse_depth),
                                               camera_pose(line.anchor_frame));
      line.orthonormal = orthonormal_from_plucker(world);
    }
  } else if (representation == LineRepresentation::kOrthonormal) {
    for (auto& [id, line] : lines) {
      const PluckerLine local = invert_transform_line(plucker_from_orthonormal(line.orthonormal),
                                                      camera_pose(line.anchor_frame));
      line.inverse_depth = closest_inverse_depth_line(local, line.anchor_s(), line.anchor_e());
    }
  }
  representation = target;
}

void check_consistency(const FactorGraph& graph, const SlidingWindowState& state) {
  auto need_frame = [&](FrameId id, const char* what) {
    if (!state.contains(id)) {
      throw Error(ErrorKind::kMissingState, std::string(what) + " references frame " +
                                                std::to_string(id));
    }
  };
  for (const auto& f : graph.odometry) {
    need_frame(f.frame_i, "odometry factor");
    need_frame(f.frame_j, "odometry factor");
  }
  for (const auto& o : graph.points) {
    need_frame(o.frame_id, "point observation");
    if (!state.points.contains(o.feature)) {
      throw Error(ErrorKind::kMissingState, "point feature " + std::to_string(o.feature));
    }
  }
  for (const auto& o : graph.lines) {
    need_frame(o.obs.frame_id, "line observation");
    if (!state.lines.contains(o.feature)) {
      throw Error(ErrorKind::kMissingState, "line feature " + std::to_string(o.feature));
    }
  }
  for (const auto& [id, p] : state.points) need_frame(p.anchor_frame, "point anchor");
  for (const auto& [id, l] : state.lines) need_frame(l.anchor_frame, "line anchor");
  for (FrameId id : state.prior.frames) need_frame(id, "marginal prior");
}

}  // namespace lineba
