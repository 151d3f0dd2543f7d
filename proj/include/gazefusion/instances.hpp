#pragma once

#include "gazefusion/surfel_map.hpp"

#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace gazefusion {

struct ObjectInstance {
  InstanceId id = 0;  // 0 until assigned by matching
  int class_index = 0;
  std::vector<SurfelId> members;  // ascending
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::AlignedBox3d bounds;
  int first_seen = 0;
  int last_seen = 0;
};

struct InstanceConfig {
  double link_distance = 0.1;
  std::size_t min_size = 30;
  double min_overlap = 0.25;  // fraction of the smaller instance
  std::size_t dormant_capacity = 10000;
};

/// Connected components over stable surfels: two surfels link when they
/// share the argmax class and lie within `link_distance`. Components below
/// `min_size` are dropped; the rest are ordered by descending size, ties by
/// smallest member id.
std::vector<ObjectInstance> extract_instances(const SurfelMap& map, std::size_t min_size,
                                              double link_distance = 0.1);

struct InstanceMatch {
  std::vector<InstanceId> ids;                        // per current instance
  std::vector<std::optional<std::size_t>> previous;  // matched index into `previous`
};

/// Greedy overlap matching. Matched instances inherit the previous id;
/// unmatched ones draw fresh ids from `next_id`.
InstanceMatch match_instances(std::span<const ObjectInstance> previous, std::span<const ObjectInstance> current,
                              InstanceId& next_id, double min_overlap = 0.25);

/// Persistent instance identities across extractions. Instances missing from
/// an extraction move to a dormant set and can be reclaimed later.
class InstanceRegistry {
 public:
  explicit InstanceRegistry(InstanceConfig config = {}) : config_(config) {}

  const InstanceConfig& config() const { return config_; }

  /// Extracts, matches against active and dormant instances, and writes the
  /// assigned ids back onto the map's surfels.
  const std::vector<ObjectInstance>& update(SurfelMap& map);

  /// Matches an externally extracted list (ids ignored) at `frame`.
  const std::vector<ObjectInstance>& update(std::vector<ObjectInstance> current, int frame);

  const std::vector<ObjectInstance>& active() const { return active_; }
  const std::vector<ObjectInstance>& dormant() const { return dormant_; }
  /// Active then dormant instances, ascending by id.
  std::vector<ObjectInstance> all() const;

  /// Instance (active first, then dormant) whose member set contains the surfel.
  std::optional<InstanceId> instance_of(SurfelId surfel) const;
  const ObjectInstance* find(InstanceId id) const;

 private:
  void rebuild_lookup();

  InstanceConfig config_;
  std::vector<ObjectInstance> active_;
  std::vector<ObjectInstance> dormant_;
  std::unordered_map<SurfelId, InstanceId> lookup_;
  InstanceId next_id_ = 1;
};

}  // namespace gazefusion
