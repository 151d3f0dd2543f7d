#pragma once

#include "gazefusion/frame.hpp"
#include "gazefusion/gaze.hpp"
#include "gazefusion/geometry.hpp"
#include "gazefusion/instances.hpp"
#include "gazefusion/surfel_map.hpp"
#include "gazefusion/tracking.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazefusion {

namespace fs = std::filesystem;

struct Association {
  double timestamp = 0;
  fs::path rgb;
  fs::path depth;
  std::optional<fs::path> probabilities;
};

/// A recorded sequence on disk:
///
///   root/manifest          intrinsics plus optional gaze / groundtruth /
///                          homography / classes entries (key=value)
///   root/associations.txt  "timestamp rgb/<f>.png depth/<f>.png [prob/<f>.pfrm]"
///
/// All referenced paths are relative to root and must stay inside it.
struct SequenceManifest {
  fs::path root;
  CameraIntrinsics intrinsics;
  std::vector<Association> associations;
  std::optional<fs::path> gaze;
  std::optional<fs::path> groundtruth;
  std::optional<fs::path> homography;
  std::optional<fs::path> classes;
};

inline constexpr const char* kManifestName = "manifest";
inline constexpr const char* kAssociationsName = "associations.txt";

/// Throws MalformedManifest, MissingFile, or NonMonotonicTimestamps.
SequenceManifest load_sequence(const fs::path& root);

/// Reads the images (and probability map, if listed) of association i.
Frame load_frame(const SequenceManifest& manifest, std::size_t i);

// Gaze CSV: header "timestamp,x,y,valid".
std::vector<GazeSample> read_gaze_csv(const fs::path& path);
void write_gaze_csv(const fs::path& path, std::span<const GazeSample> samples);

// Calibration pairs: one "sx sy tx ty" per line, '#' comments allowed.
std::vector<PointPair> read_point_pairs(const fs::path& path);

// TUM trajectory: "timestamp tx ty tz qx qy qz qw", 6 decimals.
std::string format_tum_line(double timestamp, const Pose& pose);
std::pair<double, Pose> parse_tum_line(const std::string& line);
void export_trajectory(const fs::path& path, std::span<const TrajectoryEntry> trajectory);
std::vector<TrajectoryEntry> read_trajectory(const fs::path& path);

enum class Palette { Rgb, Class };

/// Palette color of a class; names "furniture" and "objects" get the
/// pink / orange legend colors, everything else a fixed label colormap.
Rgb class_color(int class_index, const std::vector<std::string>& class_names);

struct PlyVertex {
  Eigen::Vector3f position;
  Eigen::Vector3f normal;
  Rgb color;
  float radius = 0;
  float confidence = 0;
  std::uint16_t class_index = 0;
  std::uint32_t instance = 0;  // 0 = none

  bool operator==(const PlyVertex&) const = default;
};

/// Binary little-endian PLY, one vertex per surfel. Returns bytes written.
std::size_t export_ply(const SurfelMap& map, Palette palette, const fs::path& path);
std::vector<PlyVertex> read_ply(const fs::path& path);

/// One JSON object per hit: ts, source, px, point, surfel, class,
/// class_name, instance.
void export_gaze_events(const fs::path& path, std::span<const GazeHit> hits, const std::vector<std::string>& class_names);
std::vector<GazeHit> read_gaze_events(const fs::path& path);

/// CSV "instance,class,class_name,size,cx,cy,cz,first_seen,last_seen".
void export_instances(const fs::path& path, std::span<const ObjectInstance> instances,
                      const std::vector<std::string>& class_names);

struct InstanceRow {
  InstanceId instance = 0;
  int class_index = 0;
  std::string class_name;
  std::size_t size = 0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  int first_seen = 0;
  int last_seen = 0;
};
std::vector<InstanceRow> read_instances(const fs::path& path);

/// Lossless binary map snapshot ("SMAP"), used by the export subcommand.
void write_map_snapshot(const fs::path& path, const SurfelMap& map);
SurfelMap read_map_snapshot(const fs::path& path);

}  // namespace gazefusion
