#pragma once

#include "gazefusion/frame.hpp"
#include "gazefusion/geometry.hpp"
#include "gazefusion/labels.hpp"
#include "gazefusion/tracking.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gazefusion::synth {

struct Primitive {
  enum class Kind { Box, Plane };
  Kind kind = Kind::Box;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // box center, or the plane's anchor point
  Eigen::Vector3d extent = Eigen::Vector3d::Ones();  // box: full side lengths; plane: unit normal
  int class_index = 0;
  Rgb color = Rgb::Zero();

  /// Ray parameter of the first intersection with t > 0.
  std::optional<double> intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;
  /// Unsigned distance from p to the primitive's surface.
  double surface_distance(const Eigen::Vector3d& p) const;
};

struct SyntheticScene {
  std::vector<Primitive> primitives;
  Eigen::AlignedBox3d bounds;
  int num_classes = 2;

  /// Throws InvalidArgument when a primitive leaves the bounds or a class
  /// index is out of range.
  void validate() const;
};

/// Scene text: one primitive per line,
///   box   cx cy cz sx sy sz class r g b
///   plane px py pz nx ny nz class r g b
/// plus optional "bounds x0 y0 z0 x1 y1 z1" and "classes K" lines.
SyntheticScene parse_scene(const std::string& text);
SyntheticScene read_scene(const std::filesystem::path& path);
std::string format_scene(const SyntheticScene& scene);

/// Four walls around a 6 m x 6 m floor plan plus three boxes, one class and
/// color per primitive (classes 1..7), K = 10.
SyntheticScene room_scene();

struct RaycastHit {
  double t = 0;
  int primitive = -1;
};
std::optional<RaycastHit> raycast(const SyntheticScene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir);

struct RenderedFrame {
  Frame frame;                 // raw depth quantized with k.depth_scale
  Image<float> depth;          // exact metric depth (0 = no hit)
  Image<int> true_class;       // -1 = no hit
  Image<int> primitive;        // -1 = no hit
};

/// Ray-casts every pixel. Depths that do not fit the 16-bit raw range are
/// reported as missing.
RenderedFrame render_frame(const SyntheticScene& scene, const Pose& pose, const CameraIntrinsics& k,
                           double timestamp = 0);

/// Per pixel: `accuracy` on the true class, the rest spread evenly; with
/// probability `flip_rate` the peak moves to a uniformly drawn wrong class.
/// Pixels without a class get a uniform distribution. Throws InvalidAccuracy
/// unless 1/K < accuracy <= 1.
ProbabilityFrame noisy_probmap(const Image<int>& true_class, int num_classes, double accuracy, double flip_rate,
                               std::uint64_t seed);

struct ScanpathConfig {
  int samples_per_frame = 3;
  double jitter_sigma = 2.0;   // pixels
  int min_fixation = 4;        // samples per fixation
  int max_fixation = 12;
  Homography overlay;          // eye-tracker -> RGB-D; samples are emitted in eye-tracker pixels
};

struct ScanpathSample {
  GazeSample sample;
  int target = -1;  // primitive index, -1 if nothing was visible
  int frame = 0;
};

struct TimedPose {
  double timestamp = 0;
  Pose pose;
};

/// Fixations on randomly chosen visible primitives (anchor point projects
/// in frame and is not occluded). Sample timestamps of frame i fall in
/// [t_i, t_{i+1}).
std::vector<ScanpathSample> scanpath(const SyntheticScene& scene, const std::vector<TimedPose>& trajectory,
                                     const CameraIntrinsics& k, const ScanpathConfig& cfg, std::uint64_t seed);

/// Camera at `eye` looking at `target`, world z up (camera x right, y down, z forward).
Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target);

/// Arc of `frames` poses around `center` at `radius`, advancing `step`
/// radians per frame, looking at `target`; timestamps at `period` seconds.
std::vector<TimedPose> orbit(const Eigen::Vector3d& center, double radius, double start_angle, double step, int frames,
                             const Eigen::Vector3d& target, double period = 1.0 / 30.0);

CameraIntrinsics vga_intrinsics(double depth_scale = 0.001);

struct SequenceOptions {
  double accuracy = 0.8;
  double flip_rate = 0.05;
  bool probability_maps = true;
  ScanpathConfig gaze;
  std::vector<std::string> class_names;  // defaults to class_0..class_{K-1}
};

/// Writes a complete sequence directory (manifest, associations, images,
/// probability maps, gaze CSV, ground truth, homography, class names).
/// Returns the scanpath ground truth.
std::vector<ScanpathSample> write_sequence(const std::filesystem::path& root, const SyntheticScene& scene,
                                           const std::vector<TimedPose>& trajectory, const CameraIntrinsics& k,
                                           const SequenceOptions& options, std::uint64_t seed);

}  // namespace gazefusion::synth
