#pragma once

#include "gazefusion/frame.hpp"
#include "gazefusion/geometry.hpp"
#include "gazefusion/surfel_map.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazefusion {

struct TrackingConfig {
  int levels = 3;
  int max_iterations = 10;         // per pyramid level
  double geometric_weight = 0.9;   // lambda in lambda*E_icp + (1-lambda)*E_rgb
  double convergence = 1e-7;       // on the norm of the pose increment
  int min_inliers = 500;
  double huber = 0.1;              // photometric residual threshold, intensity in [0,1]
  double max_condition = 1e8;
  int max_step_halvings = 8;

  void validate() const;
};

enum class TrackingStatus { Converged, MaxIterations, Lost };

/// One accepted Gauss-Newton step: energy of the step's correspondence set
/// before and after the update.
struct TrackingStep {
  int level = 0;
  double before = 0;
  double after = 0;
};

std::string_view to_string(TrackingStatus status);

struct TrackingResult {
  double timestamp = 0;
  Pose pose;
  std::size_t inliers = 0;
  double residual = 0;  // final energy per valid pixel at the finest level
  TrackingStatus status = TrackingStatus::Lost;
  int iterations = 0;   // Gauss-Newton iterations at the finest level
  std::vector<TrackingStep> steps;
};

/// Frame-to-model pose estimation: joint point-to-plane ICP and photometric
/// alignment against the map rendered at `init`, coarse to fine. Increments
/// are applied on the right, pose <- pose * exp(xi). Pixels are re-associated
/// after every accepted step; a step is accepted (after halving as needed)
/// when it does not raise the energy of the correspondences it was computed
/// from. A rotation-only pass on the coarsest level runs before the full
/// 6-dof passes.
TrackingResult estimate_pose(const Frame& frame, const SurfelMap& map, const Pose& init, const CameraIntrinsics& k,
                             const TrackingConfig& cfg);

struct TrajectoryEntry {
  double timestamp = 0;
  Pose pose;
  bool lost = false;
};

/// Lost frames hold the last good pose and are flagged.
std::vector<TrajectoryEntry> head_trajectory(std::span<const TrackingResult> results);

namespace tracking_detail {

using Jacobian = Eigen::Matrix<double, 1, 6>;

/// r = n . (T p - q) for a frame point p, model point q, model normal n.
double point_to_plane_residual(const Pose& T, const Eigen::Vector3d& p, const Eigen::Vector3d& q,
                               const Eigen::Vector3d& n);
/// d r / d xi at xi = 0 for T * exp(xi).
Jacobian point_to_plane_jacobian(const Pose& T, const Eigen::Vector3d& p, const Eigen::Vector3d& n);

/// Intensity image with bilinear sampling; NaN marks missing pixels.
struct IntensityImage {
  Image<float> values;
  /// Value and exact bilinear gradient; std::nullopt when any of the four
  /// neighbours is missing or out of bounds.
  std::optional<std::pair<double, Eigen::Vector2d>> sample(double x, double y) const;
};

/// r = I_frame - I_model(project(reference^-1 * T * p)).
std::optional<double> photometric_residual(const Pose& T, const Pose& reference, const Eigen::Vector3d& p,
                                           double frame_intensity, const IntensityImage& model,
                                           const CameraIntrinsics& k);
std::optional<Jacobian> photometric_jacobian(const Pose& T, const Pose& reference, const Eigen::Vector3d& p,
                                             const IntensityImage& model, const CameraIntrinsics& k);

/// Factor-2 min-pooling over valid (> 0) depths.
Image<float> downsample_depth(const Image<float>& depth);
/// Factor-2 min-pooling of a camera-frame vertex map: each output keeps the
/// whole point of its nearest valid (z > 0) input, first in scan order on ties.
/// The kept depth equals downsample_depth of the z channel.
Image<Eigen::Vector3d> downsample_points(const Image<Eigen::Vector3d>& points);
/// Factor-2 box filter.
Image<float> downsample_gray(const Image<float>& gray);

}  // namespace tracking_detail

}  // namespace gazefusion
