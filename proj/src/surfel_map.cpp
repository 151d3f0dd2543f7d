#include "gazefusion/surfel_map.hpp"

#include <algorithm>
#include <cmath>

namespace gazefusion {

VoxelHashGrid::Key VoxelHashGrid::key(const Eigen::Vector3d& p) const {
  return {static_cast<long long>(std::floor(p.x() / cell_size_)), static_cast<long long>(std::floor(p.y() / cell_size_)),
          static_cast<long long>(std::floor(p.z() / cell_size_))};
}

void VoxelHashGrid::insert(SurfelId id, const Eigen::Vector3d& p) { cells_[key(p)].push_back(id); }

void VoxelHashGrid::erase(SurfelId id, const Eigen::Vector3d& p) {
  const auto it = cells_.find(key(p));
  if (it == cells_.end()) return;
  auto& ids = it->second;
  const auto pos = std::find(ids.begin(), ids.end(), id);
  if (pos != ids.end()) {
    *pos = ids.back();
    ids.pop_back();
  }
  if (ids.empty()) cells_.erase(it);
}

void VoxelHashGrid::move(SurfelId id, const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  if (key(from) == key(to)) return;
  erase(id, from);
  insert(id, to);
}

std::size_t VoxelHashGrid::entry_count() const {
  std::size_t n = 0;
  for (const auto& [k, ids] : cells_) n += ids.size();
  return n;
}

SurfelMap::SurfelMap(int num_classes, MapConfig config)
    : num_classes_(num_classes), config_(config), grid_(config.voxel_size) {
  if (num_classes < 1) throw Error(ErrorCode::InvalidArgument, "class count must be at least 1");
}

void SurfelMap::set_class_names(std::vector<std::string> names) {
  if (static_cast<int>(names.size()) != num_classes_) {
    throw Error(ErrorCode::DimensionMismatch, "class-name table length differs from class count");
  }
  class_names_ = std::move(names);
}

std::string SurfelMap::class_name(int index) const {
  if (index >= 0 && index < static_cast<int>(class_names_.size())) return class_names_[index];
  return "class_" + std::to_string(index);
}

const Surfel* SurfelMap::find(SurfelId id) const {
  const auto it = std::lower_bound(surfels_.begin(), surfels_.end(), id,
                                   [](const Surfel& s, SurfelId value) { return s.id < value; });
  return it != surfels_.end() && it->id == id ? &*it : nullptr;
}

Surfel* SurfelMap::find(SurfelId id) {
  return const_cast<Surfel*>(static_cast<const SurfelMap&>(*this).find(id));
}

const Surfel& SurfelMap::at(SurfelId id) const {
  const Surfel* s = find(id);
  if (!s) throw Error(ErrorCode::InvalidArgument, "unknown surfel id " + std::to_string(id));
  return *s;
}

SurfelId SurfelMap::add(Surfel surfel) {
  surfel.id = next_id_++;
  grid_.insert(surfel.id, surfel.position);
  surfels_.push_back(std::move(surfel));
  return surfels_.back().id;
}

void SurfelMap::restore(Surfel surfel, SurfelId next_id) {
  if (!surfels_.empty() && surfel.id <= surfels_.back().id) {
    throw Error(ErrorCode::InvalidArgument, "restored surfel ids must ascend");
  }
  if (surfel.id >= next_id) throw Error(ErrorCode::InvalidArgument, "restored surfel id beyond next id");
  grid_.insert(surfel.id, surfel.position);
  surfels_.push_back(std::move(surfel));
  next_id_ = next_id;
}

void SurfelMap::set_position(SurfelId id, const Eigen::Vector3d& position) {
  Surfel* s = find(id);
  if (!s) throw Error(ErrorCode::InvalidArgument, "unknown surfel id " + std::to_string(id));
  grid_.move(id, s->position, position);
  s->position = position;
}

std::vector<SurfelId> SurfelMap::query_radius(const Eigen::Vector3d& center, double r) const {
  if (!(r > 0)) throw Error(ErrorCode::InvalidArgument, "query radius must be positive");
  std::vector<SurfelId> out;
  const double r2 = r * r;
  grid_.for_each_candidate(center, r, [&](SurfelId id) {
    if ((find(id)->position - center).squaredNorm() <= r2) out.push_back(id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct Projected {
  SurfelId id;
  double u, v, z;
  double radius_px;
  Eigen::Vector3d normal;  // camera frame
  double plane;            // normal . center, camera frame
};

std::vector<Projected> project_visible(const SurfelMap& map, const Pose& pose, const CameraIntrinsics& k) {
  const Pose to_camera = pose.inverse();
  std::vector<Projected> out;
  out.reserve(map.size());
  for (const auto& s : map.surfels()) {
    const Eigen::Vector3d q = to_camera * s.position;
    if (!(q.z() > 0)) continue;
    const Eigen::Vector3d n = to_camera.rotation() * s.normal;
    if (!(n.dot(q) < 0)) continue;
    const auto px = try_project<double>(q, k);
    if (!px) continue;
    out.push_back({s.id, px->x(), px->y(), q.z(), std::max(1.0, s.radius * k.fx / q.z()), n, n.dot(q)});
  }
  return out;
}

template <typename F>
void for_each_disc_pixel(const Projected& p, const CameraIntrinsics& k, F&& f) {
  const int u0 = std::max(0, static_cast<int>(std::ceil(p.u - p.radius_px)));
  const int u1 = std::min(k.width - 1, static_cast<int>(std::floor(p.u + p.radius_px)));
  const int v0 = std::max(0, static_cast<int>(std::ceil(p.v - p.radius_px)));
  const int v1 = std::min(k.height - 1, static_cast<int>(std::floor(p.v + p.radius_px)));
  const double r2 = p.radius_px * p.radius_px;
  for (int v = v0; v <= v1; ++v) {
    const double ry = (v - k.cy) / k.fy;
    for (int u = u0; u <= u1; ++u) {
      const double d2 = (u - p.u) * (u - p.u) + (v - p.v) * (v - p.v);
      if (d2 > r2) continue;
      // Depth of the surfel's plane along this pixel's ray; slanted discs
      // must not hide the surface they belong to.
      const double denom = p.normal.x() * (u - k.cx) / k.fx + p.normal.y() * ry + p.normal.z();
      double z = p.z;
      if (denom < -1e-6) z = std::clamp(p.plane / denom, 0.5 * p.z, 2.0 * p.z);
      f(u, v, d2, z);
    }
  }
}

int round_pixel(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace

IndexMap render_index_map(const SurfelMap& map, const Pose& pose, const CameraIntrinsics& k) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  IndexMap out{Image<SurfelId>(k.width, k.height, kNoSurfel), Image<double>(k.width, k.height, 0.0),
               Image<SurfelId>(k.width, k.height, kNoSurfel), Image<double>(k.width, k.height, 0.0)};
  const auto visible = project_visible(map, pose, k);
  const MapConfig& cfg = map.config();

  // Front-most splat depth per pixel.
  Image<double> zbuffer(k.width, k.height, kInf);
  for (const auto& p : visible) {
    for_each_disc_pixel(p, k, [&](int u, int v, double, double z) { zbuffer(u, v) = std::min(zbuffer(u, v), z); });
  }
  auto on_front_surface = [&](int u, int v, double z) {
    const double front = zbuffer(u, v);
    return z <= front + cfg.occlusion_margin + cfg.occlusion_ratio * front;
  };

  Image<double> cover_dist(k.width, k.height, kInf);
  for (const auto& p : visible) {
    for_each_disc_pixel(p, k, [&](int u, int v, double d2, double z) {
      if (!on_front_surface(u, v, z)) return;
      const SurfelId cur = out.cover(u, v);
      const double cur_d2 = cover_dist(u, v);
      const double cur_z = out.cover_depth(u, v);
      const bool better = cur == kNoSurfel || d2 < cur_d2 || (d2 == cur_d2 && (z < cur_z || (z == cur_z && p.id < cur)));
      if (better) {
        out.cover(u, v) = p.id;
        cover_dist(u, v) = d2;
        out.cover_depth(u, v) = z;
      }
    });
    const int u = round_pixel(p.u);
    const int v = round_pixel(p.v);
    if (!out.ids.contains(u, v) || !on_front_surface(u, v, p.z)) continue;
    const SurfelId cur = out.ids(u, v);
    if (cur == kNoSurfel || p.z < out.depth(u, v) || (p.z == out.depth(u, v) && p.id < cur)) {
      out.ids(u, v) = p.id;
      out.depth(u, v) = p.z;
    }
  }
  return out;
}

double sample_weight(double u, double v, const CameraIntrinsics& k, double sigma) {
  const double corners[4][2] = {{0, 0}, {k.width - 1.0, 0}, {0, k.height - 1.0}, {k.width - 1.0, k.height - 1.0}};
  double max_dist = 0;
  for (const auto& c : corners) max_dist = std::max(max_dist, std::hypot(c[0] - k.cx, c[1] - k.cy));
  const double gamma = std::hypot(u - k.cx, v - k.cy) / max_dist;
  return std::exp(-gamma * gamma / (2.0 * sigma * sigma));
}

double surfel_radius(double z, const Eigen::Vector3d& normal_cam, const CameraIntrinsics& k, const MapConfig& cfg) {
  const double nz = std::abs(normal_cam.z());
  const double r = nz > 0 ? z * std::sqrt(2.0) / (k.fx * nz) : cfg.max_radius;
  return std::clamp(r, cfg.min_radius, cfg.max_radius);
}

namespace {

// Distance along the pixel ray between the measured point and the surfel's
// tangent plane (camera frame).
double ray_distance(const Eigen::Vector3d& measured, const Eigen::Vector3d& surfel_pos, const Eigen::Vector3d& surfel_normal) {
  const double range = measured.norm();
  const Eigen::Vector3d dir = measured / range;
  const double denom = surfel_normal.dot(dir);
  if (std::abs(denom) < 1e-6) return std::abs(measured.z() - surfel_pos.z());
  const double t = surfel_normal.dot(surfel_pos) / denom;
  return std::abs(range - t);
}

}  // namespace

IndexMap gate_index_map(const IndexMap& index_map, const SurfelMap& map, const DepthImage& depth, const Pose& pose,
                        const CameraIntrinsics& k) {
  if (depth.width() != index_map.width() || depth.height() != index_map.height()) {
    throw Error(ErrorCode::DimensionMismatch, "depth image does not match the index map");
  }
  IndexMap out = index_map;
  const Pose to_camera = pose.inverse();
  const double gate = map.config().max_ray_distance;
  auto consistent = [&](int u, int v, SurfelId id) {
    const std::uint16_t raw = depth(u, v);
    if (id == kNoSurfel || raw == 0) return true;
    const Surfel& s = map.at(id);
    const Eigen::Vector3d p_cam = backproject_metric<double>(Eigen::Vector2d(u, v), raw * k.depth_scale, k);
    return ray_distance(p_cam, to_camera * s.position, to_camera.rotation() * s.normal) <= gate;
  };
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      if (!consistent(u, v, out.ids(u, v))) out.ids(u, v) = kNoSurfel;
      if (!consistent(u, v, out.cover(u, v))) out.cover(u, v) = kNoSurfel;
    }
  }
  return out;
}

IntegrationReport integrate(SurfelMap& map, const Frame& frame, const Pose& pose, const CameraIntrinsics& k) {
  if (!pose.is_finite()) throw Error(ErrorCode::PoseNotFinite, "integration pose has non-finite entries");
  if (frame.depth.width() != k.width || frame.depth.height() != k.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth image does not match intrinsics");
  }
  const bool has_color = frame.rgb.width() == k.width && frame.rgb.height() == k.height;
  const MapConfig& cfg = map.config();
  const double cos_gate = std::cos(cfg.max_normal_angle_deg * M_PI / 180.0);
  const NormalMap normals = compute_normals(frame.depth, k);
  const IndexMap index = render_index_map(map, pose, k);
  const Pose to_camera = pose.inverse();
  const int now = map.frame();

  IntegrationReport report;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const std::uint16_t raw = frame.depth(u, v);
      if (raw == 0) continue;
      const auto& n_cam = normals(u, v);
      if (!n_cam) {
        ++report.skipped;
        continue;
      }
      const Eigen::Vector3d p_cam = backproject_metric<double>(Eigen::Vector2d(u, v), raw * k.depth_scale, k);
      const Eigen::Vector3d p_map = pose * p_cam;
      const Eigen::Vector3d n_map = pose.rotation() * *n_cam;
      const double w = sample_weight(u, v, k, cfg.weight_sigma);
      const double radius = surfel_radius(p_cam.z(), *n_cam, k, cfg);
      const Rgb color = has_color ? frame.rgb(u, v) : Rgb(128, 128, 128);

      const SurfelId assoc = index.associated(u, v);
      if (assoc != kNoSurfel) {
        Surfel& s = *map.find(assoc);
        const Eigen::Vector3d s_cam = to_camera * s.position;
        const Eigen::Vector3d sn_cam = to_camera.rotation() * s.normal;
        if (ray_distance(p_cam, s_cam, sn_cam) <= cfg.max_ray_distance && s.normal.dot(n_map) >= cos_gate) {
          const double c = s.confidence;
          const double total = c + w;
          map.set_position(s.id, (c * s.position + w * p_map) / total);
          s.normal = (c * s.normal + w * n_map).normalized();
          for (int ch = 0; ch < 3; ++ch) {
            s.color[ch] = static_cast<std::uint8_t>(std::lround((c * s.color[ch] + w * color[ch]) / total));
          }
          s.radius = std::min(s.radius, radius);
          s.confidence = total;
          s.updated_at = now;
          ++report.updated;
          continue;
        }
      }
      Surfel fresh;
      fresh.position = p_map;
      fresh.normal = n_map.normalized();
      fresh.radius = radius;
      fresh.color = color;
      fresh.confidence = w;
      fresh.labels = ClassDistribution::uniform(map.num_classes());
      fresh.created_at = now;
      fresh.updated_at = now;
      map.add(std::move(fresh));
      ++report.created;
    }
  }
  map.advance_frame();
  return report;
}

std::size_t prune(SurfelMap& map, int current_frame) {
  const MapConfig& cfg = map.config();
  return map.remove_if([&](const Surfel& s) {
    return s.confidence < cfg.stable_confidence && current_frame - s.created_at > cfg.probation_frames;
  });
}

}  // namespace gazefusion
