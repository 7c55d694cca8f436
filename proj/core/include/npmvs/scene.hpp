#pragma once

#include <optional>
#include <vector>

#include "npmvs/geometry.hpp"
#include "npmvs/grid.hpp"

namespace npmvs {

struct SceneView {
  Image image;  // luma in [0, 1]
  CameraView camera;
  DepthRange range;
  std::optional<DepthMap> gt_depth;
};

/// Calibrated views of one scene. Every view can act as the reference.
struct SceneBundle {
  std::vector<SceneView> views;

  std::size_t size() const { return views.size(); }

  /// Union of the per-view depth ranges.
  DepthRange global_range() const;

  /// Throws ErrorKind::Config when views disagree in size with their cameras
  /// or ground truth, or a camera/range is invalid.
  void validate() const;
};

}  // namespace npmvs
