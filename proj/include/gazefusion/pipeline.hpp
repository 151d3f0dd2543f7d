#pragma once

#include "gazefusion/gaze.hpp"
#include "gazefusion/instances.hpp"
#include "gazefusion/io.hpp"
#include "gazefusion/surfel_map.hpp"
#include "gazefusion/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace gazefusion {

enum class PoseSource { Tracked, GroundTruth };

PoseSource parse_pose_source(const std::string& text);
std::string_view to_string(PoseSource source);

/// Everything a run needs, read from one key=value file. Unknown keys,
/// duplicates, and out-of-range values raise ConfigError.
///
///   pose_source = tracked | groundtruth
///   seed, lost_threshold (fraction of frames), instance_interval
///   tracking.{levels,max_iterations,geometric_weight,convergence,min_inliers,
///             huber,max_condition,max_step_halvings}
///   map.{max_ray_distance,max_normal_angle_deg,weight_sigma,min_radius,
///        max_radius,stable_confidence,probation_frames,voxel_size,
///        occlusion_margin,occlusion_ratio}
///   gaze.{window,max_gap}
///   instances.{link_distance,min_size,min_overlap,dormant_capacity}
///   export.{ply,trajectory,gaze,instances,snapshot} = true | false
struct PipelineConfig {
  TrackingConfig tracking;
  MapConfig map;
  InstanceConfig instances;
  int gaze_window = kGazeWindow;
  double dwell_max_gap = kDwellMaxGap;
  PoseSource pose_source = PoseSource::Tracked;
  std::uint64_t seed = 0;
  double lost_threshold = 0.1;
  int instance_interval = 10;
  bool export_ply = true;
  bool export_trajectory = true;
  bool export_gaze = true;
  bool export_instances = true;
  bool export_snapshot = true;

  void validate() const;
};

PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig read_pipeline_config(const fs::path& path);

struct RunSummary {
  std::size_t frames = 0;
  std::size_t surfels = 0;
  std::size_t lost_frames = 0;
  std::size_t gaze_samples = 0;  // valid samples inside the sequence time span
  std::size_t gaze_hits = 0;
  std::size_t instances = 0;
  double hit_rate() const { return gaze_samples ? double(gaze_hits) / double(gaze_samples) : 0.0; }
  double lost_fraction() const { return frames ? double(lost_frames) / double(frames) : 0.0; }
};

struct RunResult {
  RunSummary summary;
  SurfelMap map;
  std::vector<TrackingResult> tracking;
  std::vector<TrajectoryEntry> trajectory;
  std::vector<GazeHit> gaze;
  std::vector<ObjectInstance> instances;
};

using FrameCallback = std::function<void(std::size_t index, const TrackingResult& result)>;

/// Runs the whole sequence in memory; nothing is written.
RunResult run_pipeline(const SequenceManifest& manifest, const PipelineConfig& config,
                       const FrameCallback& on_frame = {});

/// Export file names inside an output directory.
inline constexpr const char* kPlyRgbName = "map_rgb.ply";
inline constexpr const char* kPlyClassName = "map_class.ply";
inline constexpr const char* kTrajectoryName = "trajectory.txt";
inline constexpr const char* kGazeEventsName = "gaze_events.jsonl";
inline constexpr const char* kInstancesName = "instances.csv";
inline constexpr const char* kSnapshotName = "map.smap";
inline constexpr const char* kSummaryName = "summary.txt";

/// Writes the enabled exports plus summary.txt into `dir`.
void write_exports(const RunResult& result, const PipelineConfig& config, const fs::path& dir);

std::string format_summary(const RunSummary& summary);

struct StatsRow {
  InstanceId instance = 0;
  std::string class_name;
  double dwell = 0;
  int revisits = 0;
  std::size_t samples = 0;
};

struct StatsReport {
  std::vector<StatsRow> rows;                             // ascending instance id
  std::vector<std::pair<std::string, double>> classes;    // dwell per class, descending
};

/// Dwell and revisits recomputed from gaze_events.jsonl and instances.csv.
/// Throws MissingFile if either is absent.
StatsReport compute_stats(const fs::path& dir, double max_gap = kDwellMaxGap);
std::string format_stats(const StatsReport& report, std::size_t top_n);

/// Process exit status for an error class:
///   2 configuration / usage, 3 input-output and data files, 4 tracking lost,
///   5 degenerate calibration, 1 anything else.
int exit_code(ErrorCode code);

}  // namespace gazefusion
