#include "gazefusion/gaze.hpp"

#include "gazefusion/semantic_fusion.hpp"

#include <cmath>
#include <map>

namespace gazefusion {

std::string_view to_string(GazeSource source) {
  switch (source) {
    case GazeSource::Direct: return "Direct";
    case GazeSource::WindowFallback: return "WindowFallback";
    case GazeSource::Miss: return "Miss";
  }
  return "Unknown";
}

Eigen::Vector2d map_gaze_pixel(const GazeSample& sample, const Homography& h, const CameraIntrinsics& k) {
  if (!sample.valid) throw Error(ErrorCode::InvalidSample, "gaze sample flagged invalid");
  const Eigen::Vector2d px = apply_homography(sample.pixel, h);
  // Must round to a pixel inside the image.
  if (!(px.x() >= -0.5 && px.y() >= -0.5 && px.x() < k.width - 0.5 && px.y() < k.height - 0.5)) {
    throw Error(ErrorCode::OutOfFrame, "gaze point outside the RGB-D image");
  }
  return px;
}

GazeHit locate_gaze(const Eigen::Vector2d& px, const IndexMap& index_map, const SurfelMap& map, int window) {
  GazeHit hit;
  hit.pixel = px;
  const int u0 = static_cast<int>(std::floor(px.x() + 0.5));
  const int v0 = static_cast<int>(std::floor(px.y() + 0.5));
  if (!index_map.ids.contains(u0, v0)) throw Error(ErrorCode::OutOfFrame, "gaze pixel outside the index map");

  auto depth_at = [&](int u, int v) {
    return index_map.ids(u, v) != kNoSurfel ? index_map.depth(u, v) : index_map.cover_depth(u, v);
  };

  SurfelId best = index_map.associated(u0, v0);
  if (best != kNoSurfel) {
    hit.source = GazeSource::Direct;
  } else {
    long best_d2 = 0;
    double best_z = 0;
    for (int v = v0 - window; v <= v0 + window; ++v) {
      for (int u = u0 - window; u <= u0 + window; ++u) {
        if (!index_map.ids.contains(u, v)) continue;
        const SurfelId id = index_map.associated(u, v);
        if (id == kNoSurfel) continue;
        const long d2 = static_cast<long>(u - u0) * (u - u0) + static_cast<long>(v - v0) * (v - v0);
        const double z = depth_at(u, v);
        if (best == kNoSurfel || d2 < best_d2 || (d2 == best_d2 && (z < best_z || (z == best_z && id < best)))) {
          best = id;
          best_d2 = d2;
          best_z = z;
        }
      }
    }
    if (best == kNoSurfel) return hit;
    hit.source = GazeSource::WindowFallback;
  }
  const Surfel& s = map.at(best);
  hit.surfel = best;
  hit.point = s.position;
  hit.class_index = surfel_class(s).first;
  hit.instance = s.instance;
  return hit;
}

std::vector<DwellEntry> accumulate_dwell(std::span<const GazeHit> hits, double max_gap) {
  std::map<InstanceId, DwellEntry> table;
  std::optional<InstanceId> run_instance;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const GazeHit& h = hits[i];
    if (i > 0 && h.timestamp < hits[i - 1].timestamp) {
      throw Error(ErrorCode::NonMonotonicTimestamps, "gaze hits must be time ordered");
    }
    if (!h.instance) {
      run_instance.reset();
      continue;
    }
    DwellEntry& entry = table[*h.instance];
    entry.instance = *h.instance;
    ++entry.samples;
    const double gap = i > 0 ? h.timestamp - hits[i - 1].timestamp : 0.0;
    if (run_instance == h.instance && gap <= max_gap) {
      entry.dwell += gap;
    } else {
      if (entry.samples > 1) ++entry.revisits;
      run_instance = h.instance;
    }
  }
  std::vector<DwellEntry> out;
  for (const auto& [id, e] : table) out.push_back(e);
  return out;
}

}  // namespace gazefusion
