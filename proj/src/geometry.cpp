#include "gazefusion/geometry.hpp"

#include "gazefusion/key_value.hpp"

#include <Eigen/SVD>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace gazefusion {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::OutOfFrame: return "OutOfFrame";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::PoseNotFinite: return "PoseNotFinite";
    case ErrorCode::EmptyMap: return "EmptyMap";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSample: return "InvalidSample";
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::WriteFailure: return "WriteFailure";
    case ErrorCode::InvalidAccuracy: return "InvalidAccuracy";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::TrackingLost: return "TrackingLost";
  }
  return "Unknown";
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0 && fy > 0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(cx >= 0 && cx < width && cy >= 0 && cy < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point outside the image");
  }
  if (!(depth_scale > 0)) throw Error(ErrorCode::InvalidArgument, "depth_scale must be positive");
}

CameraIntrinsics CameraIntrinsics::downsampled(int level) const {
  CameraIntrinsics k = *this;
  for (int i = 0; i < level; ++i) {
    k.fx *= 0.5;
    k.fy *= 0.5;
    // Pixel (2u, 2v)..(2u+1, 2v+1) collapses onto u: centers at 2u + 0.5.
    k.cx = (k.cx - 0.5) * 0.5;
    k.cy = (k.cy - 0.5) * 0.5;
    k.width /= 2;
    k.height /= 2;
  }
  return k;
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d m;
  m << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return m;
}

std::pair<double, double> pose_difference(const Pose& a, const Pose& b) {
  const double dt = (a.translation() - b.translation()).norm();
  const Eigen::Matrix3d dr = a.rotation().transpose() * b.rotation();
  const double c = std::clamp((dr.trace() - 1.0) * 0.5, -1.0, 1.0);
  // acos loses precision near zero; recover the small angle from the skew part.
  const Eigen::Vector3d s(dr(2, 1) - dr(1, 2), dr(0, 2) - dr(2, 0), dr(1, 0) - dr(0, 1));
  return {dt, std::atan2(0.5 * s.norm(), c)};
}

Homography::Homography(const Eigen::Matrix3d& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (!m.allFinite() || scale == 0 || std::abs(m(2, 2)) < 1e-12 * scale) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography cannot be normalized");
  }
  matrix_ = m / m(2, 2);
  if (std::abs(matrix_.determinant()) < 1e-14 * std::pow(matrix_.cwiseAbs().maxCoeff(), 3)) {
    throw Error(ErrorCode::DegenerateConfiguration, "singular homography");
  }
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = dx;
  m(1, 2) = dy;
  return Homography(m);
}

Eigen::Vector2d project(const Eigen::Vector3d& point_cam, const CameraIntrinsics& k) {
  if (!(point_cam.z() > 0)) throw Error(ErrorCode::BehindCamera, "point has non-positive depth");
  const Eigen::Vector2d px(k.fx * point_cam.x() / point_cam.z() + k.cx, k.fy * point_cam.y() / point_cam.z() + k.cy);
  if (!k.in_frame(px.x(), px.y())) throw Error(ErrorCode::OutOfFrame, "projection outside the image");
  return px;
}

Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, std::uint16_t raw_depth, const CameraIntrinsics& k) {
  if (raw_depth == 0) throw Error(ErrorCode::InvalidDepth, "missing depth measurement");
  return backproject_metric<double>(pixel, raw_depth * k.depth_scale, k);
}

NormalMap compute_normals(const Image<Eigen::Vector3d>& points) {
  NormalMap normals(points.width(), points.height());
  const double crease_cos = std::cos(kCreaseAngleDeg * M_PI / 180.0);
  for (int v = 1; v + 1 < points.height(); ++v) {
    for (int u = 1; u + 1 < points.width(); ++u) {
      const Eigen::Vector3d& c = points(u, v);
      const double d = c.z();
      if (!(d > 0)) continue;
      const double limit = kNormalDiscontinuity * d;
      const Eigen::Vector3d* neighbours[4] = {&points(u - 1, v), &points(u + 1, v), &points(u, v - 1),
                                              &points(u, v + 1)};
      bool ok = true;
      for (const auto* pn : neighbours) ok = ok && pn->z() > 0 && std::abs(pn->z() - d) <= limit;
      if (!ok) continue;
      const Eigen::Vector3d left = c - points(u - 1, v);
      const Eigen::Vector3d right = points(u + 1, v) - c;
      const Eigen::Vector3d up = c - points(u, v - 1);
      const Eigen::Vector3d down = points(u, v + 1) - c;
      if (left.dot(right) < crease_cos * left.norm() * right.norm() ||
          up.dot(down) < crease_cos * up.norm() * down.norm()) {
        continue;
      }
      const Eigen::Vector3d du = left + right;
      const Eigen::Vector3d dv = up + down;
      Eigen::Vector3d n = du.cross(dv);
      const double len = n.norm();
      if (!(len > 0)) continue;
      n /= len;
      if (n.dot(c) > 0) n = -n;
      normals(u, v) = n;
    }
  }
  return normals;
}

NormalMap compute_normals(const Image<float>& depth_m, const CameraIntrinsics& k) {
  if (depth_m.width() != k.width || depth_m.height() != k.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth image does not match intrinsics");
  }
  Image<Eigen::Vector3d> points(k.width, k.height, Eigen::Vector3d::Zero());
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      if (depth_m(u, v) > 0) points(u, v) = backproject_metric<double>(Eigen::Vector2d(u, v), depth_m(u, v), k);
    }
  }
  return compute_normals(points);
}

NormalMap compute_normals(const DepthImage& depth, const CameraIntrinsics& k) {
  Image<float> metric(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i) metric[i] = static_cast<float>(depth[i] * k.depth_scale);
  return compute_normals(metric, k);
}

Eigen::Vector2d apply_homography(const Eigen::Vector2d& px, const Homography& h) {
  const Eigen::Vector3d q = h.matrix() * px.homogeneous();
  if (std::abs(q.z()) < 1e-12) throw Error(ErrorCode::DegeneratePoint, "point maps to infinity");
  return q.hnormalized();
}

namespace {

// Similarity taking the points' centroid to the origin and their mean
// distance to sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Eigen::Vector2d> points) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double mean_dist = 0;
  for (const auto& p : points) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(points.size());
  if (!(mean_dist > 0)) throw Error(ErrorCode::DegenerateConfiguration, "coincident points");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c, double scale) {
  const Eigen::Vector2d ab = b - a;
  const Eigen::Vector2d ac = c - a;
  return std::abs(ab.x() * ac.y() - ab.y() * ac.x()) <= 1e-9 * scale * scale;
}

bool all_collinear(std::span<const Eigen::Vector2d> pts, double scale) {
  // Pick the farthest point from pts[0] as the line direction.
  std::size_t far = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if ((pts[i] - pts[0]).squaredNorm() > (pts[far] - pts[0]).squaredNorm()) far = i;
  }
  if (far == 0) return true;
  for (const auto& p : pts) {
    if (!collinear(pts[0], pts[far], p, scale)) return false;
  }
  return true;
}

}  // namespace

HomographyFit calibrate_homography(std::span<const PointPair> pairs) {
  if (pairs.size() < 4) throw Error(ErrorCode::DegenerateConfiguration, "at least 4 point pairs required");
  std::vector<Eigen::Vector2d> src, dst;
  for (const auto& p : pairs) {
    if (!p.source.allFinite() || !p.target.allFinite()) {
      throw Error(ErrorCode::DegenerateConfiguration, "non-finite calibration point");
    }
    src.push_back(p.source);
    dst.push_back(p.target);
  }
  const Eigen::Matrix3d ts = normalizing_transform(src);
  const Eigen::Matrix3d tt = normalizing_transform(dst);
  const double src_scale = std::sqrt(2.0) / ts(0, 0);
  const double dst_scale = std::sqrt(2.0) / tt(0, 0);
  if (all_collinear(src, src_scale) || all_collinear(dst, dst_scale)) {
    throw Error(ErrorCode::DegenerateConfiguration, "calibration points are collinear");
  }
  if (pairs.size() == 4) {
    for (int skip = 0; skip < 4; ++skip) {
      std::vector<int> idx;
      for (int i = 0; i < 4; ++i) {
        if (i != skip) idx.push_back(i);
      }
      if (collinear(src[idx[0]], src[idx[1]], src[idx[2]], src_scale) ||
          collinear(dst[idx[0]], dst[idx[1]], dst[idx[2]], dst_scale)) {
        throw Error(ErrorCode::DegenerateConfiguration, "three of four calibration points are collinear");
      }
    }
  }

  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d s = ts * src[i].homogeneous();
    const Eigen::Vector3d d = tt * dst[i].homogeneous();
    // Rows of d x (H s) = 0.
    a.row(2 * i) << 0, 0, 0, -d.z() * s.transpose(), d.y() * s.transpose();
    a.row(2 * i + 1) << d.z() * s.transpose(), 0, 0, 0, -d.x() * s.transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (n > 4 && sv(7) < 1e-12 * sv(0)) {
    throw Error(ErrorCode::DegenerateConfiguration, "calibration system is rank deficient");
  }
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  HomographyFit fit{Homography(tt.inverse() * hn * ts), 0.0};
  double sum_sq = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d q = fit.homography.matrix() * src[i].homogeneous();
    sum_sq += (q.hnormalized() - dst[i]).squaredNorm();
  }
  fit.rms = std::sqrt(sum_sq / static_cast<double>(n));
  return fit;
}

CameraIntrinsics parse_intrinsics(const std::string& text) {
  const auto kv = KeyValueFile::parse(text, ErrorCode::MalformedManifest);
  CameraIntrinsics k;
  k.fx = kv.get_double("fx");
  k.fy = kv.get_double("fy");
  k.cx = kv.get_double("cx");
  k.cy = kv.get_double("cy");
  k.width = static_cast<int>(kv.get_int("width"));
  k.height = static_cast<int>(kv.get_int("height"));
  k.depth_scale = kv.get_double("depth_scale");
  try {
    k.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedManifest, e.what());
  }
  return k;
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_intrinsics(ss.str());
}

std::string format_intrinsics(const CameraIntrinsics& k) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "fx=" << k.fx << "\nfy=" << k.fy << "\ncx=" << k.cx << "\ncy=" << k.cy << "\nwidth=" << k.width
     << "\nheight=" << k.height << "\ndepth_scale=" << k.depth_scale << "\n";
  return os.str();
}

Homography read_homography(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path);
  Eigen::Matrix3d m;
  std::string token;
  int count = 0;
  while (in >> token) {
    if (count == 9) throw Error(ErrorCode::MalformedManifest, "homography file has more than 9 values");
    m(count / 3, count % 3) = parse_double(token, ErrorCode::MalformedManifest);
    ++count;
  }
  if (count != 9) throw Error(ErrorCode::MalformedManifest, "homography file needs 9 values");
  try {
    return Homography(m);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedManifest, e.what());
  }
}

void write_homography(const std::string& path, const Homography& h) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::WriteFailure, path);
  out << std::setprecision(17);
  for (int r = 0; r < 3; ++r) {
    out << h.matrix()(r, 0) << ' ' << h.matrix()(r, 1) << ' ' << h.matrix()(r, 2) << '\n';
  }
  if (!out) throw Error(ErrorCode::WriteFailure, path);
}

}  // namespace gazefusion
