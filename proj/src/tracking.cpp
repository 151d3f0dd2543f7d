#include "gazefusion/tracking.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gazefusion {

void TrackingConfig::validate() const {
  if (levels < 1) throw Error(ErrorCode::ConfigError, "tracking levels must be >= 1");
  if (max_iterations < 1) throw Error(ErrorCode::ConfigError, "tracking iterations must be >= 1");
  if (!(geometric_weight >= 0 && geometric_weight <= 1)) throw Error(ErrorCode::ConfigError, "lambda must lie in [0,1]");
  if (!(convergence > 0 && huber > 0 && max_condition > 0)) {
    throw Error(ErrorCode::ConfigError, "tracking thresholds must be positive");
  }
  if (min_inliers < 1) throw Error(ErrorCode::ConfigError, "minimum inlier count must be positive");
}

std::string_view to_string(TrackingStatus status) {
  switch (status) {
    case TrackingStatus::Converged: return "Converged";
    case TrackingStatus::MaxIterations: return "MaxIterations";
    case TrackingStatus::Lost: return "Lost";
  }
  return "Unknown";
}

std::vector<TrajectoryEntry> head_trajectory(std::span<const TrackingResult> results) {
  std::vector<TrajectoryEntry> out;
  out.reserve(results.size());
  std::optional<Pose> last_good;
  for (const auto& r : results) {
    const bool lost = r.status == TrackingStatus::Lost;
    if (!lost) last_good = r.pose;
    out.push_back({r.timestamp, lost && last_good ? *last_good : r.pose, lost});
  }
  return out;
}

namespace tracking_detail {

double point_to_plane_residual(const Pose& T, const Eigen::Vector3d& p, const Eigen::Vector3d& q,
                               const Eigen::Vector3d& n) {
  return n.dot(T * p - q);
}

Jacobian point_to_plane_jacobian(const Pose& T, const Eigen::Vector3d& p, const Eigen::Vector3d& n) {
  const Eigen::Vector3d n_cam = T.rotation().transpose() * n;
  Jacobian j;
  j << n_cam.transpose(), p.cross(n_cam).transpose();
  return j;
}

std::optional<std::pair<double, Eigen::Vector2d>> IntensityImage::sample(double x, double y) const {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  if (x0 < 0 || y0 < 0 || x0 + 1 >= values.width() || y0 + 1 >= values.height()) return std::nullopt;
  const double i00 = values(x0, y0);
  const double i10 = values(x0 + 1, y0);
  const double i01 = values(x0, y0 + 1);
  const double i11 = values(x0 + 1, y0 + 1);
  if (std::isnan(i00) || std::isnan(i10) || std::isnan(i01) || std::isnan(i11)) return std::nullopt;
  const double tx = x - fx;
  const double ty = y - fy;
  const double value = (1 - ty) * ((1 - tx) * i00 + tx * i10) + ty * ((1 - tx) * i01 + tx * i11);
  const Eigen::Vector2d grad((1 - ty) * (i10 - i00) + ty * (i11 - i01), (1 - tx) * (i01 - i00) + tx * (i11 - i10));
  return std::make_pair(value, grad);
}

std::optional<double> photometric_residual(const Pose& T, const Pose& reference, const Eigen::Vector3d& p,
                                           double frame_intensity, const IntensityImage& model,
                                           const CameraIntrinsics& k) {
  const Eigen::Vector3d q = reference.inverse() * (T * p);
  if (!(q.z() > 0)) return std::nullopt;
  const auto s = model.sample(k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy);
  if (!s) return std::nullopt;
  return frame_intensity - s->first;
}

namespace {

// -dI/dxi for q = rel * p, given the intensity gradient at the projection of q.
Jacobian photometric_jacobian_at(const Pose& rel, const Eigen::Vector3d& p, const Eigen::Vector3d& q,
                                 const Eigen::Vector2d& grad, const CameraIntrinsics& k) {
  const double iz = 1.0 / q.z();
  const double gx = grad.x() * k.fx * iz;
  const double gy = grad.y() * k.fy * iz;
  const Eigen::Vector3d a(gx, gy, -(gx * q.x() + gy * q.y()) * iz);
  const Eigen::Vector3d c = rel.rotation().transpose() * a;
  Jacobian j;
  j << -c.transpose(), -p.cross(c).transpose();
  return j;
}

}  // namespace

std::optional<Jacobian> photometric_jacobian(const Pose& T, const Pose& reference, const Eigen::Vector3d& p,
                                             const IntensityImage& model, const CameraIntrinsics& k) {
  const Pose rel = reference.inverse() * T;
  const Eigen::Vector3d q = rel * p;
  if (!(q.z() > 0)) return std::nullopt;
  const auto s = model.sample(k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy);
  if (!s) return std::nullopt;
  return photometric_jacobian_at(rel, p, q, s->second, k);
}

Image<float> downsample_depth(const Image<float>& depth) {
  Image<float> out(depth.width() / 2, depth.height() / 2, 0.0f);
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      float best = 0;
      for (int dv = 0; dv < 2; ++dv) {
        for (int du = 0; du < 2; ++du) {
          const float d = depth(2 * u + du, 2 * v + dv);
          if (d > 0 && (best == 0 || d < best)) best = d;
        }
      }
      out(u, v) = best;
    }
  }
  return out;
}

Image<Eigen::Vector3d> downsample_points(const Image<Eigen::Vector3d>& points) {
  Image<Eigen::Vector3d> out(points.width() / 2, points.height() / 2, Eigen::Vector3d::Zero());
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      Eigen::Vector3d& best = out(u, v);
      for (int dv = 0; dv < 2; ++dv) {
        for (int du = 0; du < 2; ++du) {
          const Eigen::Vector3d& p = points(2 * u + du, 2 * v + dv);
          if (p.z() > 0 && (best.z() <= 0 || p.z() < best.z())) best = p;
        }
      }
    }
  }
  return out;
}

Image<float> downsample_gray(const Image<float>& gray) {
  Image<float> out(gray.width() / 2, gray.height() / 2, 0.0f);
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      out(u, v) = 0.25f * (gray(2 * u, 2 * v) + gray(2 * u + 1, 2 * v) + gray(2 * u, 2 * v + 1) +
                           gray(2 * u + 1, 2 * v + 1));
    }
  }
  return out;
}

}  // namespace tracking_detail

namespace {

using tracking_detail::IntensityImage;
using tracking_detail::Jacobian;

// Map rendered at the reference pose: per-pixel model point, normal (map
// frame), and grayscale intensity.
struct ModelView {
  Pose reference;
  CameraIntrinsics k;
  Image<Eigen::Vector3f> points;
  Image<Eigen::Vector3f> normals;
  Image<unsigned char> valid;
  IntensityImage intensity;
};

ModelView render_model(const SurfelMap& map, const Pose& reference, const CameraIntrinsics& k) {
  const IndexMap index = render_index_map(map, reference, k);
  ModelView view{reference, k, Image<Eigen::Vector3f>(k.width, k.height), Image<Eigen::Vector3f>(k.width, k.height),
                 Image<unsigned char>(k.width, k.height, 0),
                 IntensityImage{Image<float>(k.width, k.height, std::numeric_limits<float>::quiet_NaN())}};
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const SurfelId id = index.associated(u, v);
      if (id == kNoSurfel) continue;
      const Surfel& s = *map.find(id);
      view.points(u, v) = s.position.cast<float>();
      view.normals(u, v) = s.normal.cast<float>();
      view.valid(u, v) = 1;
      view.intensity.values(u, v) = to_gray(s.color);
    }
  }
  // Splats overhang silhouettes, which shifts color edges there. Intensity
  // near a depth discontinuity of the rendering is left out.
  const Pose to_reference = reference.inverse();
  Image<float> z(k.width, k.height, 0.0f);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      if (view.valid(u, v)) z(u, v) = static_cast<float>((to_reference * view.points(u, v).cast<double>()).z());
    }
  }
  constexpr int kEdgeBand = 2;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      if (!view.valid(u, v)) continue;
      bool edge = false;
      for (int dv = -kEdgeBand; dv <= kEdgeBand && !edge; ++dv) {
        for (int du = -kEdgeBand; du <= kEdgeBand && !edge; ++du) {
          const int uu = u + du;
          const int vv = v + dv;
          if (!z.contains(uu, vv)) continue;
          const float zn = z(uu, vv);
          edge = zn <= 0 || std::abs(zn - z(u, v)) > kNormalDiscontinuity * z(u, v);
        }
      }
      if (edge) view.intensity.values(u, v) = std::numeric_limits<float>::quiet_NaN();
    }
  }
  return view;
}

// Coarse levels keep the full-resolution point chosen by min-pooling rather
// than backprojecting the pooled depth at the coarse pixel center, which would
// put it off slanted surfaces.
struct Level {
  CameraIntrinsics k;
  Image<Eigen::Vector3d> points;
  Image<float> gray;
  NormalMap normals;
  std::size_t valid_pixels = 0;
};

struct LinearSystem {
  Matrix6d H = Matrix6d::Zero();
  Vector6d b = Vector6d::Zero();
  double energy = 0;
  std::size_t inliers = 0;
};

// A frame pixel paired with a model point at the linearization pose.
struct Correspondence {
  Eigen::Vector3d p;  // frame point, camera frame
  Eigen::Vector3d m;  // model point, map frame
  Eigen::Vector3d n;  // model normal, map frame
  float gray = 0;
  bool photometric = false;
  double photometric_cost = 0;  // at the linearization pose
};

class Aligner {
 public:
  Aligner(const ModelView& model, const TrackingConfig& cfg, const MapConfig& map_cfg)
      : model_(model), cfg_(cfg), map_cfg_(map_cfg),
        cos_gate_(std::cos(map_cfg.max_normal_angle_deg * M_PI / 180.0)),
        // Cost charged to pixels without a valid correspondence.
        geometric_cap_(map_cfg.max_ray_distance * map_cfg.max_ray_distance),
        photometric_cap_(robust_cost(1.0)) {}

  double robust_cost(double r) const {
    const double a = std::abs(r);
    return a <= cfg_.huber ? r * r : 2 * cfg_.huber * a - cfg_.huber * cfg_.huber;
  }
  double robust_weight(double r) const {
    const double a = std::abs(r);
    return a <= cfg_.huber ? 1.0 : cfg_.huber / a;
  }

  // Associates every valid pixel at pose T and builds the normal equations.
  // The energy covers all valid pixels, unmatched ones at the capped cost.
  LinearSystem linearize(const Level& level, const Pose& T, bool photometric,
                         std::vector<Correspondence>& matches) const {
    LinearSystem sys;
    matches.clear();
    const double lambda = photometric ? cfg_.geometric_weight : 1.0;
    const Pose to_reference = model_.reference.inverse() * T;
    const Pose from_map_to_ref = model_.reference.inverse();
    const CameraIntrinsics& mk = model_.k;
    // Fixed-order accumulation keeps results bit-reproducible.
    for (int v = 0; v < level.k.height; ++v) {
      for (int u = 0; u < level.k.width; ++u) {
        if (!level.normals(u, v)) continue;
        const Eigen::Vector3d& p = level.points(u, v);
        const Eigen::Vector3d q_ref = to_reference * p;
        double geometric_cost = geometric_cap_;
        double photometric_cost = photometric_cap_;
        if (q_ref.z() > 0) {
          const double x = mk.fx * q_ref.x() / q_ref.z() + mk.cx;
          const double y = mk.fy * q_ref.y() / q_ref.z() + mk.cy;
          const int iu = static_cast<int>(std::floor(x + 0.5));
          const int iv = static_cast<int>(std::floor(y + 0.5));
          if (iu >= 0 && iv >= 0 && iu < mk.width && iv < mk.height && model_.valid(iu, iv)) {
            const Eigen::Vector3d m = model_.points(iu, iv).cast<double>();
            const Eigen::Vector3d n = model_.normals(iu, iv).cast<double>();
            const Eigen::Vector3d n_frame = T.rotation() * *level.normals(u, v);
            const Eigen::Vector3d m_ref = from_map_to_ref * m;
            const Eigen::Vector3d n_ref = from_map_to_ref.rotation() * n;
            if (gate(q_ref, m_ref, n_ref) && n.dot(n_frame) >= cos_gate_) {
              const double r = tracking_detail::point_to_plane_residual(T, p, m, n);
              geometric_cost = std::min(r * r, geometric_cap_);
              ++sys.inliers;
              const Jacobian j = tracking_detail::point_to_plane_jacobian(T, p, n);
              sys.H.noalias() += lambda * j.transpose() * j;
              sys.b.noalias() += lambda * j.transpose() * r;
              Correspondence c{p, m, n, level.gray(u, v), false};
              if (photometric) {
                const auto s = model_.intensity.sample(x, y);
                if (s) {
                  const double rp = level.gray(u, v) - s->first;
                  photometric_cost = robust_cost(rp);
                  const Jacobian jp = tracking_detail::photometric_jacobian_at(to_reference, p, q_ref, s->second, mk);
                  const double w = (1 - lambda) * robust_weight(rp);
                  sys.H.noalias() += w * jp.transpose() * jp;
                  sys.b.noalias() += w * jp.transpose() * rp;
                  c.photometric = true;
                  c.photometric_cost = photometric_cost;
                }
              }
              matches.push_back(c);
            }
          }
        }
        sys.energy += lambda * geometric_cost + (photometric ? (1 - lambda) * photometric_cost : 0.0);
      }
    }
    return sys;
  }

  // Energy of a fixed correspondence set at pose T. This is the objective a
  // Gauss-Newton step is checked against. A photometric sample that leaves the
  // valid model region keeps its cost from the linearization pose.
  double matched_energy(const std::vector<Correspondence>& matches, const Pose& T, bool photometric) const {
    const double lambda = photometric ? cfg_.geometric_weight : 1.0;
    const Pose to_reference = model_.reference.inverse() * T;
    const CameraIntrinsics& mk = model_.k;
    double energy = 0;
    for (const auto& c : matches) {
      const double r = tracking_detail::point_to_plane_residual(T, c.p, c.m, c.n);
      energy += lambda * std::min(r * r, geometric_cap_);
      if (!c.photometric) continue;
      double cost = c.photometric_cost;
      const Eigen::Vector3d q = to_reference * c.p;
      if (q.z() > 0) {
        const auto s = model_.intensity.sample(mk.fx * q.x() / q.z() + mk.cx, mk.fy * q.y() / q.z() + mk.cy);
        if (s) cost = robust_cost(c.gray - s->first);
      }
      energy += (1 - lambda) * cost;
    }
    return energy;
  }

 private:
  bool gate(const Eigen::Vector3d& measured, const Eigen::Vector3d& model_point, const Eigen::Vector3d& model_normal) const {
    const double range = measured.norm();
    const Eigen::Vector3d dir = measured / range;
    const double denom = model_normal.dot(dir);
    const double dist = std::abs(denom) < 1e-6 ? std::abs(measured.z() - model_point.z())
                                               : std::abs(range - model_normal.dot(model_point) / denom);
    return dist <= map_cfg_.max_ray_distance;
  }

  const ModelView& model_;
  const TrackingConfig& cfg_;
  const MapConfig& map_cfg_;
  double cos_gate_;
  double geometric_cap_;
  double photometric_cap_;
};

std::vector<Level> build_pyramid(const Frame& frame, const CameraIntrinsics& k, int levels, bool& has_gray) {
  std::vector<Level> pyramid;
  Level base;
  base.k = k;
  base.points = Image<Eigen::Vector3d>(k.width, k.height, Eigen::Vector3d::Zero());
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double d = frame.depth(u, v) * k.depth_scale;
      if (d > 0) base.points(u, v) = backproject_metric<double>(Eigen::Vector2d(u, v), d, k);
    }
  }
  has_gray = frame.rgb.width() == k.width && frame.rgb.height() == k.height;
  base.gray = has_gray ? to_gray(frame.rgb) : Image<float>(k.width, k.height, 0.0f);
  pyramid.push_back(std::move(base));
  for (int l = 1; l < levels; ++l) {
    const Level& prev = pyramid.back();
    if (prev.k.width < 16 || prev.k.height < 16) break;
    Level next;
    next.k = k.downsampled(l);
    next.points = tracking_detail::downsample_points(prev.points);
    next.gray = tracking_detail::downsample_gray(prev.gray);
    pyramid.push_back(std::move(next));
  }
  for (auto& level : pyramid) {
    level.normals = compute_normals(level.points);
    for (std::size_t i = 0; i < level.normals.size(); ++i) {
      if (level.normals[i]) ++level.valid_pixels;
    }
  }
  return pyramid;
}

}  // namespace

TrackingResult estimate_pose(const Frame& frame, const SurfelMap& map, const Pose& init, const CameraIntrinsics& k,
                             const TrackingConfig& cfg) {
  cfg.validate();
  if (map.empty()) throw Error(ErrorCode::EmptyMap, "cannot track against an empty map");
  if (!init.is_finite()) throw Error(ErrorCode::PoseNotFinite, "initial pose has non-finite entries");
  if (frame.depth.width() != k.width || frame.depth.height() != k.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth image does not match intrinsics");
  }

  TrackingResult lost{frame.timestamp, init, 0, 0.0, TrackingStatus::Lost, 0, {}};
  bool has_gray = false;
  const std::vector<Level> pyramid = build_pyramid(frame, k, cfg.levels, has_gray);
  const ModelView model = render_model(map, init, k);
  const Aligner aligner(model, cfg, map.config());
  const bool photometric = has_gray && cfg.geometric_weight < 1.0;

  Pose T = init;
  TrackingResult result = lost;
  std::vector<Correspondence> matches;
  // The first pass solves for rotation alone on the coarsest level. Under
  // projective association a rotation error shifts the whole image, and a full
  // step from there can trade it for translation along a weakly observed axis.
  const int coarsest = static_cast<int>(pyramid.size()) - 1;
  for (int pass = coarsest + 1; pass >= 0; --pass) {
    const bool rotation_only = pass > coarsest;
    const int l = std::min(pass, coarsest);
    const Level& level = pyramid[l];
    const bool finest = l == 0 && !rotation_only;
    TrackingStatus level_status = TrackingStatus::MaxIterations;
    int iterations = 0;
    LinearSystem sys = aligner.linearize(level, T, photometric, matches);
    for (int it = 0; it < cfg.max_iterations; ++it) {
      if (sys.inliers < static_cast<std::size_t>(cfg.min_inliers)) {
        if (l == 0) {
          lost.inliers = sys.inliers;
          return lost;
        }
        break;
      }
      const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(sys.H, Eigen::EigenvaluesOnly);
      const double min_ev = eig.eigenvalues()(0);
      const double max_ev = eig.eigenvalues()(5);
      if (!(min_ev > 0) || max_ev / min_ev > cfg.max_condition) {
        lost.inliers = sys.inliers;
        return lost;
      }
      ++iterations;
      Vector6d step = Vector6d::Zero();
      if (rotation_only) {
        step.tail<3>() = -sys.H.bottomRightCorner<3, 3>().ldlt().solve(sys.b.tail<3>());
      } else {
        step = -sys.H.ldlt().solve(sys.b);
      }
      const double before = aligner.matched_energy(matches, T, photometric);
      bool accepted = false;
      double after = before;
      Pose candidate = T;
      for (int h = 0; h <= cfg.max_step_halvings; ++h) {
        candidate = T * Pose::exp(step);
        after = aligner.matched_energy(matches, candidate, photometric);
        if (after <= before) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        level_status = TrackingStatus::Converged;
        break;
      }
      result.steps.push_back({l, before, after});
      T = candidate;
      sys = aligner.linearize(level, T, photometric, matches);
      if (step.norm() < cfg.convergence) {
        level_status = TrackingStatus::Converged;
        break;
      }
    }
    if (finest) {
      if (sys.inliers < static_cast<std::size_t>(cfg.min_inliers)) {
        lost.inliers = sys.inliers;
        return lost;
      }
      result.timestamp = frame.timestamp;
      result.pose = T;
      result.inliers = sys.inliers;
      result.residual = level.valid_pixels ? sys.energy / static_cast<double>(level.valid_pixels) : 0.0;
      result.status = level_status;
      result.iterations = iterations;
    }
  }
  return result;
}

}  // namespace gazefusion
