#pragma once

#include "gazefusion/frame.hpp"
#include "gazefusion/geometry.hpp"
#include "gazefusion/surfel_map.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gazefusion {

enum class GazeSource { Direct, WindowFallback, Miss };

std::string_view to_string(GazeSource source);

struct GazeHit {
  double timestamp = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();  // RGB-D pixel coordinates
  std::optional<Eigen::Vector3d> point;             // map frame; empty on Miss
  SurfelId surfel = kNoSurfel;
  int class_index = -1;
  std::optional<InstanceId> instance;
  GazeSource source = GazeSource::Miss;
};

inline constexpr int kGazeWindow = 5;
inline constexpr double kDwellMaxGap = 0.5;

/// Eye-tracker pixel -> RGB-D pixel. Throws InvalidSample for invalid
/// samples and OutOfFrame when the overlaid point leaves the image.
Eigen::Vector2d map_gaze_pixel(const GazeSample& sample, const Homography& h, const CameraIntrinsics& k);

/// Looks up the surfel under `px`, falling back to the nearest rendered
/// pixel inside a (2w+1)^2 window. The returned point is always the hit
/// surfel's position.
GazeHit locate_gaze(const Eigen::Vector2d& px, const IndexMap& index_map, const SurfelMap& map,
                    int window = kGazeWindow);

struct DwellEntry {
  InstanceId instance = 0;
  double dwell = 0;   // seconds
  int revisits = 0;   // maximal same-instance runs beyond the first
  std::size_t samples = 0;
};

/// Per-instance dwell, ascending by instance id. Gaps longer than
/// `max_gap` neither count nor continue a run; hits without an instance
/// break runs. Throws NonMonotonicTimestamps.
std::vector<DwellEntry> accumulate_dwell(std::span<const GazeHit> hits, double max_gap = kDwellMaxGap);

}  // namespace gazefusion
