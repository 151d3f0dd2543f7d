#pragma once

#include "gazefusion/error.hpp"
#include "gazefusion/image.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gazefusion {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Pinhole camera. Pixel centers sit at integer (u, v); raw depth times
/// depth_scale gives meters.
struct CameraIntrinsics {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;
  int width = 0;
  int height = 0;
  double depth_scale = 0.001;

  /// Throws InvalidArgument when any invariant is violated.
  void validate() const;

  bool in_frame(double u, double v) const { return u >= 0 && v >= 0 && u < width && v < height; }

  /// Intrinsics of a factor-2^level downsampled image (pixel-center convention kept).
  CameraIntrinsics downsampled(int level) const;

  Eigen::Matrix3d matrix() const;
};

/// Rigid-body transform mapping camera-frame coordinates into the map frame.
template <typename Scalar>
class RigidTransform {
 public:
  using Rotation = Matrix3<Scalar>;
  using Translation = Vector3<Scalar>;

  RigidTransform() : rotation_(Rotation::Identity()), translation_(Translation::Zero()) {}
  RigidTransform(const Rotation& rotation, const Translation& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform identity() { return {}; }

  const Rotation& rotation() const { return rotation_; }
  const Translation& translation() const { return translation_; }

  Translation operator*(const Translation& p) const { return rotation_ * p + translation_; }

  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }

  RigidTransform inverse() const {
    const Rotation rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
  }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation_;
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  bool is_finite() const { return rotation_.allFinite() && translation_.allFinite(); }

  template <typename Other>
  RigidTransform<Other> cast() const {
    return {rotation_.template cast<Other>(), translation_.template cast<Other>()};
  }

  /// Exponential map of the rigid-motion group. Twist layout: (v, w),
  /// translational part first.
  static RigidTransform exp(const Eigen::Matrix<Scalar, 6, 1>& twist);

  /// Inverse of exp; returns (v, w).
  Eigen::Matrix<Scalar, 6, 1> log() const;

 private:
  Rotation rotation_;
  Translation translation_;
};

using Pose = RigidTransform<double>;

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& w) {
  Matrix3<Scalar> s;
  s << Scalar(0), -w.z(), w.y(), w.z(), Scalar(0), -w.x(), -w.y(), w.x(), Scalar(0);
  return s;
}

template <typename Scalar>
RigidTransform<Scalar> RigidTransform<Scalar>::exp(const Eigen::Matrix<Scalar, 6, 1>& twist) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Vector3<Scalar> v = twist.template head<3>();
  const Vector3<Scalar> w = twist.template tail<3>();
  const Scalar theta2 = w.squaredNorm();
  const Matrix3<Scalar> W = skew<Scalar>(w);
  const Matrix3<Scalar> W2 = W * W;
  Scalar a, b, c;
  if (theta2 < Scalar(1e-12)) {
    // Taylor expansions of sin(t)/t, (1-cos t)/t^2, (t - sin t)/t^3.
    a = Scalar(1) - theta2 / Scalar(6);
    b = Scalar(0.5) - theta2 / Scalar(24);
    c = Scalar(1) / Scalar(6) - theta2 / Scalar(120);
  } else {
    const Scalar theta = sqrt(theta2);
    a = sin(theta) / theta;
    b = (Scalar(1) - cos(theta)) / theta2;
    c = (theta - sin(theta)) / (theta2 * theta);
  }
  const Matrix3<Scalar> R = Matrix3<Scalar>::Identity() + a * W + b * W2;
  const Matrix3<Scalar> V = Matrix3<Scalar>::Identity() + b * W + c * W2;
  return {R, V * v};
}

template <typename Scalar>
Eigen::Matrix<Scalar, 6, 1> RigidTransform<Scalar>::log() const {
  const Eigen::AngleAxis<Scalar> aa(rotation_);
  const Vector3<Scalar> w = aa.axis() * aa.angle();
  const Scalar theta = aa.angle();
  const Matrix3<Scalar> W = skew<Scalar>(w);
  Matrix3<Scalar> V_inv;
  if (theta < Scalar(1e-6)) {
    V_inv = Matrix3<Scalar>::Identity() - Scalar(0.5) * W + W * W / Scalar(12);
  } else {
    const Scalar half = theta / Scalar(2);
    const Scalar k = (Scalar(1) - half * std::cos(half) / std::sin(half)) / (theta * theta);
    V_inv = Matrix3<Scalar>::Identity() - Scalar(0.5) * W + k * W * W;
  }
  Eigen::Matrix<Scalar, 6, 1> out;
  out << V_inv * translation_, w;
  return out;
}

/// Translational distance and rotation angle (radians) between two poses.
std::pair<double, double> pose_difference(const Pose& a, const Pose& b);

/// Projective map between two image planes, normalized so h(2,2) = 1.
class Homography {
 public:
  Homography() : matrix_(Eigen::Matrix3d::Identity()) {}
  /// Normalizes by the bottom-right entry; throws DegenerateConfiguration
  /// when the matrix is singular or cannot be normalized.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography translation(double dx, double dy);

  const Eigen::Matrix3d& matrix() const { return matrix_; }
  Homography inverse() const { return Homography(matrix_.inverse()); }

 private:
  Eigen::Matrix3d matrix_;
};

template <typename Scalar>
std::optional<Vector2<Scalar>> try_project(const Vector3<Scalar>& point_cam, const CameraIntrinsics& k) {
  if (!(point_cam.z() > Scalar(0))) return std::nullopt;
  const Vector2<Scalar> px(Scalar(k.fx) * point_cam.x() / point_cam.z() + Scalar(k.cx),
                           Scalar(k.fy) * point_cam.y() / point_cam.z() + Scalar(k.cy));
  if (!k.in_frame(px.x(), px.y())) return std::nullopt;
  return px;
}

/// Throws BehindCamera for z <= 0 and OutOfFrame outside [0,width)x[0,height).
Eigen::Vector2d project(const Eigen::Vector3d& point_cam, const CameraIntrinsics& k);

template <typename Scalar>
Vector3<Scalar> backproject_metric(const Vector2<Scalar>& pixel, Scalar z, const CameraIntrinsics& k) {
  return {(pixel.x() - Scalar(k.cx)) * z / Scalar(k.fx), (pixel.y() - Scalar(k.cy)) * z / Scalar(k.fy), z};
}

/// Throws InvalidDepth when raw_depth is the missing-measurement sentinel 0.
Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, std::uint16_t raw_depth, const CameraIntrinsics& k);

/// Relative depth jump between neighbours that invalidates a normal.
inline constexpr double kNormalDiscontinuity = 0.05;
/// Bend between the two one-sided differences along a row or column beyond
/// which the pixel is treated as a crease and gets no normal.
inline constexpr double kCreaseAngleDeg = 25.0;

/// Per-pixel camera-frame normal, std::nullopt where invalid.
using NormalMap = Image<std::optional<Eigen::Vector3d>>;

/// Normals from central differences of backprojected neighbours, oriented
/// toward the camera. Border pixels, depth discontinuities, and creases are
/// left invalid.
NormalMap compute_normals(const DepthImage& depth, const CameraIntrinsics& k);
/// Same, over a metric depth image (meters, <= 0 means missing).
NormalMap compute_normals(const Image<float>& depth_m, const CameraIntrinsics& k);
/// Same, over a camera-frame vertex map; z <= 0 means missing.
NormalMap compute_normals(const Image<Eigen::Vector3d>& points);

/// Throws DegeneratePoint when the homogeneous coordinate vanishes.
Eigen::Vector2d apply_homography(const Eigen::Vector2d& px, const Homography& h);

struct HomographyFit {
  Homography homography;
  double rms = 0;  // reprojection RMS in target pixels
};

struct PointPair {
  Eigen::Vector2d source;
  Eigen::Vector2d target;
};

/// Hartley-normalized DLT. Throws DegenerateConfiguration for fewer than 4
/// pairs or collinear sources.
HomographyFit calibrate_homography(std::span<const PointPair> pairs);

CameraIntrinsics parse_intrinsics(const std::string& text);
CameraIntrinsics read_intrinsics(const std::string& path);
std::string format_intrinsics(const CameraIntrinsics& k);

Homography read_homography(const std::string& path);
void write_homography(const std::string& path, const Homography& h);

}  // namespace gazefusion
