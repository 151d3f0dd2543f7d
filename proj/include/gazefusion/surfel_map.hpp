#pragma once

#include "gazefusion/frame.hpp"
#include "gazefusion/geometry.hpp"
#include "gazefusion/labels.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace gazefusion {

using SurfelId = std::uint32_t;
using InstanceId = std::uint32_t;
inline constexpr SurfelId kNoSurfel = std::numeric_limits<SurfelId>::max();

struct Surfel {
  SurfelId id = kNoSurfel;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double radius = 0;
  Rgb color = Rgb::Zero();
  double confidence = 0;
  ClassDistribution labels;
  std::optional<InstanceId> instance;
  int created_at = 0;
  int updated_at = 0;
};

/// Fusion parameters shared by integration, rendering, and pruning.
struct MapConfig {
  double max_ray_distance = 0.05;      // association gate along the viewing ray, meters
  double max_normal_angle_deg = 20.0;  // association gate on normals
  double weight_sigma = 0.6;           // radial sample-weight falloff
  double min_radius = 0.001;
  double max_radius = 0.05;
  double stable_confidence = 10.0;
  int probation_frames = 20;
  double voxel_size = 0.1;
  // Rendering: a surfel stays visible when its depth is within
  // occlusion_margin + occlusion_ratio * z of the nearest splat.
  double occlusion_margin = 0.01;
  double occlusion_ratio = 0.01;
};

/// Uniform voxel hash over surfel positions.
class VoxelHashGrid {
 public:
  explicit VoxelHashGrid(double cell_size = 0.1) : cell_size_(cell_size) {}

  void insert(SurfelId id, const Eigen::Vector3d& p);
  void erase(SurfelId id, const Eigen::Vector3d& p);
  void move(SurfelId id, const Eigen::Vector3d& from, const Eigen::Vector3d& to);
  void clear() { cells_.clear(); }

  /// Candidate ids in every cell overlapping the axis-aligned box around the ball.
  template <typename F>
  void for_each_candidate(const Eigen::Vector3d& center, double r, F&& f) const {
    const Key lo = key(center.array() - r);
    const Key hi = key(center.array() + r);
    for (long long x = lo.x; x <= hi.x; ++x) {
      for (long long y = lo.y; y <= hi.y; ++y) {
        for (long long z = lo.z; z <= hi.z; ++z) {
          const auto it = cells_.find(Key{x, y, z});
          if (it == cells_.end()) continue;
          for (SurfelId id : it->second) f(id);
        }
      }
    }
  }

  std::size_t entry_count() const;
  double cell_size() const { return cell_size_; }

 private:
  struct Key {
    long long x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
    }
  };
  Key key(const Eigen::Vector3d& p) const;

  double cell_size_;
  std::unordered_map<Key, std::vector<SurfelId>, KeyHash> cells_;
};

/// Global surfel collection. Surfels are kept sorted by id; ids grow
/// monotonically and are never reused.
class SurfelMap {
 public:
  explicit SurfelMap(int num_classes = 1, MapConfig config = {});

  const MapConfig& config() const { return config_; }
  int num_classes() const { return num_classes_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  /// Throws DimensionMismatch if the table length differs from num_classes.
  void set_class_names(std::vector<std::string> names);
  std::string class_name(int index) const;

  bool empty() const { return surfels_.empty(); }
  std::size_t size() const { return surfels_.size(); }
  const std::vector<Surfel>& surfels() const { return surfels_; }

  const Surfel* find(SurfelId id) const;
  Surfel* find(SurfelId id);
  const Surfel& at(SurfelId id) const;

  /// Assigns the next id, indexes the surfel, and returns the id.
  SurfelId add(Surfel surfel);
  /// Moves a surfel and keeps the spatial index in sync.
  void set_position(SurfelId id, const Eigen::Vector3d& position);

  template <typename Pred>
  std::size_t remove_if(Pred&& pred) {
    std::size_t removed = 0;
    std::vector<Surfel> kept;
    kept.reserve(surfels_.size());
    for (auto& s : surfels_) {
      if (pred(static_cast<const Surfel&>(s))) {
        grid_.erase(s.id, s.position);
        ++removed;
      } else {
        kept.push_back(std::move(s));
      }
    }
    surfels_ = std::move(kept);
    return removed;
  }

  /// Mutable access for label and instance bookkeeping. Positions must be
  /// changed through set_position.
  std::vector<Surfel>& mutable_surfels() { return surfels_; }

  /// Ids of surfels with ||position - center|| <= r, ascending.
  std::vector<SurfelId> query_radius(const Eigen::Vector3d& center, double r) const;

  int frame() const { return frame_; }
  void advance_frame() { ++frame_; }
  void set_frame(int frame) { frame_ = frame; }
  SurfelId next_id() const { return next_id_; }
  /// Restores a surfel with an explicit id (snapshot loading); ids must ascend.
  void restore(Surfel surfel, SurfelId next_id);

  const VoxelHashGrid& grid() const { return grid_; }

 private:
  int num_classes_;
  MapConfig config_;
  std::vector<std::string> class_names_;
  std::vector<Surfel> surfels_;
  VoxelHashGrid grid_;
  SurfelId next_id_ = 0;
  int frame_ = 0;
};

/// Rendered correspondence between pixels and surfels.
///
/// `ids` holds, per pixel, the nearest visible surfel whose center projects
/// into that pixel (ties by smaller id), and `depth` its camera-frame depth.
/// `cover` extends this to every pixel inside a projected disc: among the
/// splats on the front-most surface, the one whose center is closest to the
/// pixel wins (then smaller depth, then smaller id). Splat depths are taken
/// on the surfel's plane along each pixel's ray; `cover_depth` holds that
/// depth for the winner.
struct IndexMap {
  Image<SurfelId> ids;
  Image<double> depth;
  Image<SurfelId> cover;
  Image<double> cover_depth;

  int width() const { return ids.width(); }
  int height() const { return ids.height(); }

  /// Center hit if present, otherwise the covering splat.
  SurfelId associated(int u, int v) const {
    const SurfelId id = ids(u, v);
    return id != kNoSurfel ? id : cover(u, v);
  }
};

IndexMap render_index_map(const SurfelMap& map, const Pose& pose, const CameraIntrinsics& k);

/// Drops associations whose surfel plane is farther than the ray gate from
/// the measured depth, so splats overhanging a silhouette do not pick up
/// evidence from the surface behind. Pixels without depth are kept.
IndexMap gate_index_map(const IndexMap& index_map, const SurfelMap& map, const DepthImage& depth, const Pose& pose,
                        const CameraIntrinsics& k);

struct IntegrationReport {
  std::size_t created = 0;
  std::size_t updated = 0;
  std::size_t skipped = 0;  // valid depth but no usable normal
};

/// Confidence weight of a sample at pixel (u, v).
double sample_weight(double u, double v, const CameraIntrinsics& k, double sigma);

/// Disc radius for a surface seen at depth z with camera-frame normal n.
double surfel_radius(double z, const Eigen::Vector3d& normal_cam, const CameraIntrinsics& k, const MapConfig& cfg);

/// Fuses one depth/color frame observed from `pose` and advances the map's
/// frame counter.
IntegrationReport integrate(SurfelMap& map, const Frame& frame, const Pose& pose, const CameraIntrinsics& k);

/// Drops unstable surfels older than the probation period.
std::size_t prune(SurfelMap& map, int current_frame);

}  // namespace gazefusion
