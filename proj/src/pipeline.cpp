#include "gazefusion/pipeline.hpp"

#include "gazefusion/key_value.hpp"
#include "gazefusion/semantic_fusion.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace gazefusion {

PoseSource parse_pose_source(const std::string& text) {
  if (text == "tracked") return PoseSource::Tracked;
  if (text == "groundtruth" || text == "ground-truth") return PoseSource::GroundTruth;
  throw Error(ErrorCode::ConfigError, "pose source must be tracked or groundtruth, got '" + text + "'");
}

std::string_view to_string(PoseSource source) {
  return source == PoseSource::Tracked ? "tracked" : "groundtruth";
}

void PipelineConfig::validate() const {
  tracking.validate();
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (!(map.max_ray_distance > 0) || !(map.max_normal_angle_deg > 0 && map.max_normal_angle_deg <= 90)) {
    fail("map association gates must be positive");
  }
  if (!(map.weight_sigma > 0)) fail("map.weight_sigma must be positive");
  if (!(map.min_radius > 0 && map.min_radius <= map.max_radius)) fail("map radius bounds must satisfy 0 < min <= max");
  if (!(map.stable_confidence > 0) || map.probation_frames < 0) fail("map stability thresholds out of range");
  if (!(map.voxel_size > 0)) fail("map.voxel_size must be positive");
  if (map.occlusion_margin < 0 || map.occlusion_ratio < 0) fail("map occlusion tolerances must be nonnegative");
  if (gaze_window < 0) fail("gaze.window must be nonnegative");
  if (!(dwell_max_gap > 0)) fail("gaze.max_gap must be positive");
  if (!(instances.link_distance > 0)) fail("instances.link_distance must be positive");
  if (instances.min_size < 1) fail("instances.min_size must be at least 1");
  if (!(instances.min_overlap > 0 && instances.min_overlap <= 1)) fail("instances.min_overlap must lie in (0,1]");
  if (!(lost_threshold >= 0 && lost_threshold <= 1)) fail("lost_threshold must lie in [0,1]");
  if (instance_interval < 1) fail("instance_interval must be at least 1");
}

namespace {

using Setter = std::function<void(PipelineConfig&, const KeyValueFile&, const std::string&)>;

template <typename T>
Setter real(T PipelineConfig::*group, double T::*field) {
  return [=](PipelineConfig& c, const KeyValueFile& kv, const std::string& key) { (c.*group).*field = kv.get_double(key); };
}

template <typename T, typename I>
Setter integer(T PipelineConfig::*group, I T::*field) {
  return [=](PipelineConfig& c, const KeyValueFile& kv, const std::string& key) {
    const long long v = kv.get_int(key);
    if (v < 0) throw Error(ErrorCode::ConfigError, key + " must be nonnegative");
    (c.*group).*field = static_cast<I>(v);
  };
}

Setter flag(bool PipelineConfig::*field) {
  return [=](PipelineConfig& c, const KeyValueFile& kv, const std::string& key) { c.*field = kv.get_bool(key); };
}

const std::map<std::string, Setter>& setters() {
  using P = PipelineConfig;
  static const std::map<std::string, Setter> table = {
      {"pose_source", [](P& c, const KeyValueFile& kv, const std::string& k) { c.pose_source = parse_pose_source(kv.get(k)); }},
      {"seed", [](P& c, const KeyValueFile& kv, const std::string& k) {
         const long long v = kv.get_int(k);
         if (v < 0) throw Error(ErrorCode::ConfigError, "seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(v);
       }},
      {"lost_threshold", [](P& c, const KeyValueFile& kv, const std::string& k) { c.lost_threshold = kv.get_double(k); }},
      {"instance_interval", [](P& c, const KeyValueFile& kv, const std::string& k) {
         c.instance_interval = static_cast<int>(kv.get_int(k));
       }},
      {"tracking.levels", integer(&P::tracking, &TrackingConfig::levels)},
      {"tracking.max_iterations", integer(&P::tracking, &TrackingConfig::max_iterations)},
      {"tracking.geometric_weight", real(&P::tracking, &TrackingConfig::geometric_weight)},
      {"tracking.convergence", real(&P::tracking, &TrackingConfig::convergence)},
      {"tracking.min_inliers", integer(&P::tracking, &TrackingConfig::min_inliers)},
      {"tracking.huber", real(&P::tracking, &TrackingConfig::huber)},
      {"tracking.max_condition", real(&P::tracking, &TrackingConfig::max_condition)},
      {"tracking.max_step_halvings", integer(&P::tracking, &TrackingConfig::max_step_halvings)},
      {"map.max_ray_distance", real(&P::map, &MapConfig::max_ray_distance)},
      {"map.max_normal_angle_deg", real(&P::map, &MapConfig::max_normal_angle_deg)},
      {"map.weight_sigma", real(&P::map, &MapConfig::weight_sigma)},
      {"map.min_radius", real(&P::map, &MapConfig::min_radius)},
      {"map.max_radius", real(&P::map, &MapConfig::max_radius)},
      {"map.stable_confidence", real(&P::map, &MapConfig::stable_confidence)},
      {"map.probation_frames", integer(&P::map, &MapConfig::probation_frames)},
      {"map.voxel_size", real(&P::map, &MapConfig::voxel_size)},
      {"map.occlusion_margin", real(&P::map, &MapConfig::occlusion_margin)},
      {"map.occlusion_ratio", real(&P::map, &MapConfig::occlusion_ratio)},
      {"gaze.window", [](P& c, const KeyValueFile& kv, const std::string& k) { c.gaze_window = static_cast<int>(kv.get_int(k)); }},
      {"gaze.max_gap", [](P& c, const KeyValueFile& kv, const std::string& k) { c.dwell_max_gap = kv.get_double(k); }},
      {"instances.link_distance", real(&P::instances, &InstanceConfig::link_distance)},
      {"instances.min_size", integer(&P::instances, &InstanceConfig::min_size)},
      {"instances.min_overlap", real(&P::instances, &InstanceConfig::min_overlap)},
      {"instances.dormant_capacity", integer(&P::instances, &InstanceConfig::dormant_capacity)},
      {"export.ply", flag(&P::export_ply)},
      {"export.trajectory", flag(&P::export_trajectory)},
      {"export.gaze", flag(&P::export_gaze)},
      {"export.instances", flag(&P::export_instances)},
      {"export.snapshot", flag(&P::export_snapshot)},
  };
  return table;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
  const auto kv = KeyValueFile::parse(text, ErrorCode::ConfigError);
  PipelineConfig config;
  for (const auto& [key, value] : kv.values()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    it->second(config, kv, key);
  }
  config.validate();
  return config;
}

PipelineConfig read_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str());
}

namespace {

int class_count(const SequenceManifest& manifest, const std::vector<std::string>& names) {
  if (!names.empty()) return static_cast<int>(names.size());
  for (const auto& a : manifest.associations) {
    if (a.probabilities) return read_probability_frame(a.probabilities->string()).num_classes();
  }
  return 1;
}

}  // namespace

RunResult run_pipeline(const SequenceManifest& manifest, const PipelineConfig& config, const FrameCallback& on_frame) {
  config.validate();
  const CameraIntrinsics& k = manifest.intrinsics;

  std::vector<std::string> names;
  if (manifest.classes) names = read_class_names(manifest.classes->string());
  RunResult result{RunSummary{}, SurfelMap(class_count(manifest, names), config.map), {}, {}, {}, {}};
  SurfelMap& map = result.map;
  if (!names.empty()) map.set_class_names(names);

  std::vector<TrajectoryEntry> truth;
  if (manifest.groundtruth) truth = read_trajectory(*manifest.groundtruth);
  if (config.pose_source == PoseSource::GroundTruth && truth.size() < manifest.associations.size()) {
    throw Error(ErrorCode::MissingFile, "ground-truth poses requested but the trajectory does not cover every frame");
  }

  std::vector<GazeSample> gaze;
  if (manifest.gaze) gaze = read_gaze_csv(*manifest.gaze);
  std::stable_sort(gaze.begin(), gaze.end(), [](const GazeSample& a, const GazeSample& b) { return a.timestamp < b.timestamp; });
  const Homography overlay = manifest.homography ? read_homography(manifest.homography->string()) : Homography();

  InstanceRegistry registry(config.instances);
  std::size_t next_sample = 0;
  const auto& assoc = manifest.associations;
  while (next_sample < gaze.size() && !assoc.empty() && gaze[next_sample].timestamp < assoc.front().timestamp) {
    ++next_sample;
  }

  Pose last_good = truth.empty() ? Pose() : truth.front().pose;
  for (std::size_t i = 0; i < assoc.size(); ++i) {
    const Frame frame = load_frame(manifest, i);

    TrackingResult tr;
    tr.timestamp = frame.timestamp;
    if (config.pose_source == PoseSource::GroundTruth || i == 0) {
      tr.pose = config.pose_source == PoseSource::GroundTruth ? truth[i].pose : last_good;
      tr.status = TrackingStatus::Converged;
    } else if (map.empty()) {
      tr.pose = last_good;
      tr.status = TrackingStatus::Lost;
    } else {
      tr = estimate_pose(frame, map, last_good, k, config.tracking);
    }
    const bool lost = tr.status == TrackingStatus::Lost;
    if (lost) {
      ++result.summary.lost_frames;
    } else {
      last_good = tr.pose;
      integrate(map, frame, tr.pose, k);
    }

    std::optional<IndexMap> index_map;
    if (!lost && (frame.probabilities || next_sample < gaze.size())) {
      index_map = gate_index_map(render_index_map(map, tr.pose, k), map, frame.depth, tr.pose, k);
      if (frame.probabilities) fuse_frame(map, *index_map, *frame.probabilities);
    }

    const double t_end = i + 1 < assoc.size() ? assoc[i + 1].timestamp : std::numeric_limits<double>::infinity();
    for (; next_sample < gaze.size() && gaze[next_sample].timestamp < t_end; ++next_sample) {
      const GazeSample& s = gaze[next_sample];
      if (!s.valid) continue;
      ++result.summary.gaze_samples;
      GazeHit hit;
      hit.timestamp = s.timestamp;
      try {
        hit.pixel = map_gaze_pixel(s, overlay, k);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OutOfFrame && e.code() != ErrorCode::DegeneratePoint) throw;
        hit.pixel = s.pixel;
        result.gaze.push_back(hit);
        continue;
      }
      if (index_map) {
        const double t = hit.timestamp;
        const Eigen::Vector2d px = hit.pixel;
        hit = locate_gaze(px, *index_map, map, config.gaze_window);
        hit.timestamp = t;
        hit.pixel = px;
      }
      if (hit.source != GazeSource::Miss) ++result.summary.gaze_hits;
      result.gaze.push_back(hit);
    }

    if ((i + 1) % static_cast<std::size_t>(config.instance_interval) == 0) {
      prune(map, map.frame());
      registry.update(map);
    }
    result.tracking.push_back(tr);
    if (on_frame) on_frame(i, tr);
  }
  if (assoc.size() % static_cast<std::size_t>(config.instance_interval) != 0 && !map.empty()) registry.update(map);

  // Instances are resolved against the final registry so that samples seen
  // before the first extraction are attributed as well.
  for (auto& hit : result.gaze) {
    if (hit.surfel == kNoSurfel) continue;
    if (const auto id = registry.instance_of(hit.surfel)) hit.instance = id;
  }

  result.trajectory = head_trajectory(result.tracking);
  result.instances = registry.all();
  result.summary.frames = assoc.size();
  result.summary.surfels = map.size();
  result.summary.instances = result.instances.size();
  return result;
}

std::string format_summary(const RunSummary& s) {
  char rate[32];
  std::snprintf(rate, sizeof rate, "%.6f", s.hit_rate());
  std::ostringstream os;
  os << "frames=" << s.frames << '\n'
     << "surfels=" << s.surfels << '\n'
     << "lost_frames=" << s.lost_frames << '\n'
     << "gaze_samples=" << s.gaze_samples << '\n'
     << "gaze_hits=" << s.gaze_hits << '\n'
     << "gaze_hit_rate=" << rate << '\n'
     << "instances=" << s.instances << '\n';
  return os.str();
}

void write_exports(const RunResult& result, const PipelineConfig& config, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::WriteFailure, "cannot create " + dir.string());
  const SurfelMap& map = result.map;
  std::vector<std::string> names;
  for (int c = 0; c < map.num_classes(); ++c) names.push_back(map.class_name(c));

  if (config.export_ply && !map.empty()) {
    export_ply(map, Palette::Rgb, dir / kPlyRgbName);
    export_ply(map, Palette::Class, dir / kPlyClassName);
  }
  if (config.export_trajectory) export_trajectory(dir / kTrajectoryName, result.trajectory);
  if (config.export_gaze) export_gaze_events(dir / kGazeEventsName, result.gaze, names);
  if (config.export_instances) export_instances(dir / kInstancesName, result.instances, names);
  if (config.export_snapshot) write_map_snapshot(dir / kSnapshotName, map);
  std::ofstream out(dir / kSummaryName);
  out << format_summary(result.summary);
  if (!out) throw Error(ErrorCode::WriteFailure, (dir / kSummaryName).string());
}

StatsReport compute_stats(const fs::path& dir, double max_gap) {
  const auto hits = read_gaze_events(dir / kGazeEventsName);
  const auto rows = read_instances(dir / kInstancesName);
  std::map<InstanceId, std::string> class_of;
  for (const auto& r : rows) class_of[r.instance] = r.class_name;

  StatsReport report;
  std::map<std::string, double> per_class;
  for (const auto& d : accumulate_dwell(hits, max_gap)) {
    StatsRow row{d.instance, "", d.dwell, d.revisits, d.samples};
    const auto it = class_of.find(d.instance);
    row.class_name = it != class_of.end() ? it->second : "unknown";
    per_class[row.class_name] += d.dwell;
    report.rows.push_back(row);
  }
  report.classes.assign(per_class.begin(), per_class.end());
  std::stable_sort(report.classes.begin(), report.classes.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return report;
}

std::string format_stats(const StatsReport& report, std::size_t top_n) {
  std::ostringstream os;
  char buf[160];
  os << "instance  class                 dwell_s  revisits  samples\n";
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%8u  %-20s %8.3f  %8d  %7zu\n", r.instance, r.class_name.c_str(), r.dwell, r.revisits,
                  r.samples);
    os << buf;
  }
  if (!report.classes.empty()) {
    os << "\ntop classes by dwell\n";
    for (std::size_t i = 0; i < std::min(top_n, report.classes.size()); ++i) {
      std::snprintf(buf, sizeof buf, "%2zu. %-20s %8.3f\n", i + 1, report.classes[i].first.c_str(),
                    report.classes[i].second);
      os << buf;
    }
  }
  return os.str();
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidAccuracy:
      return 2;
    case ErrorCode::MissingFile:
    case ErrorCode::MalformedManifest:
    case ErrorCode::WriteFailure:
    case ErrorCode::NonMonotonicTimestamps:
    case ErrorCode::DimensionMismatch:
      return 3;
    case ErrorCode::TrackingLost:
      return 4;
    case ErrorCode::DegenerateConfiguration:
      return 5;
    default:
      return 1;
  }
}

}  // namespace gazefusion
