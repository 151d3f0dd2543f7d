#include "gazefusion/synth.hpp"

#include "gazefusion/io.hpp"
#include "gazefusion/key_value.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace gazefusion::synth {

std::optional<double> Primitive::intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const {
  constexpr double kEps = 1e-12;
  if (kind == Kind::Plane) {
    const double denom = extent.dot(dir);
    if (std::abs(denom) < kEps) return std::nullopt;
    const double t = extent.dot(center - origin) / denom;
    return t > kEps ? std::optional<double>(t) : std::nullopt;
  }
  const Eigen::Vector3d lo = center - 0.5 * extent;
  const Eigen::Vector3d hi = center + 0.5 * extent;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < kEps) {
      if (origin[i] < lo[i] || origin[i] > hi[i]) return std::nullopt;
      continue;
    }
    double t0 = (lo[i] - origin[i]) / dir[i];
    double t1 = (hi[i] - origin[i]) / dir[i];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_far <= kEps) return std::nullopt;
  return t_near > kEps ? t_near : t_far;
}

double Primitive::surface_distance(const Eigen::Vector3d& p) const {
  if (kind == Kind::Plane) return std::abs(extent.dot(p - center));
  const Eigen::Vector3d half = 0.5 * extent;
  const Eigen::Vector3d d = (p - center).cwiseAbs() - half;
  const double outside = d.cwiseMax(0.0).norm();
  const double inside = std::min(d.maxCoeff(), 0.0);
  return std::abs(outside + inside);
}

void SyntheticScene::validate() const {
  if (num_classes < 2) throw Error(ErrorCode::InvalidArgument, "scene needs at least 2 classes");
  for (const auto& p : primitives) {
    if (p.class_index < 0 || p.class_index >= num_classes) {
      throw Error(ErrorCode::InvalidArgument, "primitive class index out of range");
    }
    if (!bounds.contains(p.center)) throw Error(ErrorCode::InvalidArgument, "primitive outside scene bounds");
    if (p.kind == Primitive::Kind::Box && !(p.extent.minCoeff() > 0)) {
      throw Error(ErrorCode::InvalidArgument, "box sizes must be positive");
    }
    if (p.kind == Primitive::Kind::Plane && std::abs(p.extent.norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "plane normal must be unit length");
    }
  }
}

SyntheticScene parse_scene(const std::string& text) {
  SyntheticScene scene;
  bool has_bounds = false;
  bool has_classes = false;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  const auto code = ErrorCode::InvalidArgument;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ls{std::string(t)};
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    const std::string where = "scene line " + std::to_string(line_no);
    if (f[0] == "bounds") {
      if (f.size() != 7) throw Error(code, where + ": bounds needs 6 values");
      scene.bounds = Eigen::AlignedBox3d(
          Eigen::Vector3d(parse_double(f[1], code), parse_double(f[2], code), parse_double(f[3], code)),
          Eigen::Vector3d(parse_double(f[4], code), parse_double(f[5], code), parse_double(f[6], code)));
      has_bounds = true;
    } else if (f[0] == "classes") {
      if (f.size() != 2) throw Error(code, where + ": classes needs 1 value");
      scene.num_classes = static_cast<int>(parse_int(f[1], code));
      has_classes = true;
    } else if (f[0] == "box" || f[0] == "plane") {
      if (f.size() != 11) throw Error(code, where + ": primitive needs 10 values");
      Primitive p;
      p.kind = f[0] == "box" ? Primitive::Kind::Box : Primitive::Kind::Plane;
      p.center = {parse_double(f[1], code), parse_double(f[2], code), parse_double(f[3], code)};
      p.extent = {parse_double(f[4], code), parse_double(f[5], code), parse_double(f[6], code)};
      if (p.kind == Primitive::Kind::Plane) {
        if (!(p.extent.norm() > 0)) throw Error(code, where + ": zero plane normal");
        p.extent.normalize();
      }
      p.class_index = static_cast<int>(parse_int(f[7], code));
      for (int c = 0; c < 3; ++c) {
        const auto v = parse_int(f[8 + c], code);
        if (v < 0 || v > 255) throw Error(code, where + ": color out of range");
        p.color[c] = static_cast<std::uint8_t>(v);
      }
      scene.primitives.push_back(p);
    } else {
      throw Error(code, where + ": unknown entry '" + f[0] + "'");
    }
  }
  if (!has_bounds) {
    for (const auto& p : scene.primitives) scene.bounds.extend(p.center);
  }
  if (!has_classes) {
    int max_class = 1;
    for (const auto& p : scene.primitives) max_class = std::max(max_class, p.class_index);
    scene.num_classes = max_class + 1;
  }
  scene.validate();
  return scene;
}

SyntheticScene read_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::string format_scene(const SyntheticScene& scene) {
  std::ostringstream os;
  os.precision(17);
  os << "classes " << scene.num_classes << '\n';
  os << "bounds " << scene.bounds.min().transpose() << ' ' << scene.bounds.max().transpose() << '\n';
  for (const auto& p : scene.primitives) {
    os << (p.kind == Primitive::Kind::Box ? "box " : "plane ") << p.center.transpose() << ' ' << p.extent.transpose()
       << ' ' << p.class_index << ' ' << int(p.color[0]) << ' ' << int(p.color[1]) << ' ' << int(p.color[2]) << '\n';
  }
  return os.str();
}

SyntheticScene room_scene() {
  SyntheticScene scene;
  scene.num_classes = 10;
  scene.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(-3, -3, -1), Eigen::Vector3d(3, 3, 4));
  auto plane = [](Eigen::Vector3d anchor, Eigen::Vector3d normal, int cls, Rgb color) {
    return Primitive{Primitive::Kind::Plane, anchor, normal, cls, color};
  };
  auto box = [](Eigen::Vector3d center, Eigen::Vector3d size, int cls, Rgb color) {
    return Primitive{Primitive::Kind::Box, center, size, cls, color};
  };
  scene.primitives = {
      plane({3, 0, 1.2}, {-1, 0, 0}, 1, Rgb(200, 180, 160)),
      plane({-3, 0, 1.2}, {1, 0, 0}, 2, Rgb(160, 190, 210)),
      plane({0, 3, 1.2}, {0, -1, 0}, 3, Rgb(210, 200, 120)),
      plane({0, -3, 1.2}, {0, 1, 0}, 4, Rgb(150, 200, 150)),
      box({0.3, 0.4, 0.4}, {0.5, 0.6, 0.8}, 5, Rgb(220, 80, 60)),
      box({-0.6, -0.3, 0.3}, {0.5, 0.5, 0.6}, 6, Rgb(60, 90, 200)),
      box({0.2, -0.8, 0.6}, {0.4, 0.4, 1.2}, 7, Rgb(240, 200, 40)),
  };
  return scene;
}

std::optional<RaycastHit> raycast(const SyntheticScene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  std::optional<RaycastHit> best;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const auto t = scene.primitives[i].intersect(origin, dir);
    if (t && (!best || *t < best->t)) best = RaycastHit{*t, static_cast<int>(i)};
  }
  return best;
}

RenderedFrame render_frame(const SyntheticScene& scene, const Pose& pose, const CameraIntrinsics& k, double timestamp) {
  RenderedFrame out{Frame{}, Image<float>(k.width, k.height, 0.0f), Image<int>(k.width, k.height, -1),
                    Image<int>(k.width, k.height, -1)};
  out.frame.timestamp = timestamp;
  out.frame.rgb = RgbImage(k.width, k.height, Rgb::Zero());
  out.frame.depth = DepthImage(k.width, k.height, 0);
  const double max_depth = 65535.0 * k.depth_scale;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      // Ray through pixel (u, v) with unit z so that t equals camera depth.
      const Eigen::Vector3d ray_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d dir = pose.rotation() * ray_cam;
      const auto hit = raycast(scene, pose.translation(), dir);
      if (!hit) continue;
      const Primitive& prim = scene.primitives[hit->primitive];
      out.depth(u, v) = static_cast<float>(hit->t);
      out.true_class(u, v) = prim.class_index;
      out.primitive(u, v) = hit->primitive;
      out.frame.rgb(u, v) = prim.color;
      if (hit->t < max_depth) {
        out.frame.depth(u, v) = static_cast<std::uint16_t>(std::lround(hit->t / k.depth_scale));
      }
    }
  }
  return out;
}

ProbabilityFrame noisy_probmap(const Image<int>& true_class, int num_classes, double accuracy, double flip_rate,
                               std::uint64_t seed) {
  if (num_classes < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 classes");
  if (!(accuracy > 1.0 / num_classes && accuracy <= 1.0)) {
    throw Error(ErrorCode::InvalidAccuracy, "accuracy must satisfy 1/K < a <= 1");
  }
  if (!(flip_rate >= 0 && flip_rate <= 1)) throw Error(ErrorCode::InvalidArgument, "flip rate must lie in [0,1]");
  ProbabilityFrame out(true_class.width(), true_class.height(), num_classes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other(0, num_classes - 2);
  const float rest = static_cast<float>((1.0 - accuracy) / (num_classes - 1));
  for (int v = 0; v < true_class.height(); ++v) {
    for (int u = 0; u < true_class.width(); ++u) {
      float* p = out.pixel(u, v);
      const int truth = true_class(u, v);
      if (truth < 0 || truth >= num_classes) {
        std::fill(p, p + num_classes, 1.0f / num_classes);
        continue;
      }
      int peak = truth;
      if (flip_rate > 0 && unit(rng) < flip_rate) {
        const int draw = other(rng);
        peak = draw >= truth ? draw + 1 : draw;
      }
      std::fill(p, p + num_classes, rest);
      p[peak] = static_cast<float>(accuracy);
    }
  }
  return out;
}

Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-9) right = forward.cross(Eigen::Vector3d::UnitY());
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return {r, eye};
}

std::vector<TimedPose> orbit(const Eigen::Vector3d& center, double radius, double start_angle, double step, int frames,
                             const Eigen::Vector3d& target, double period) {
  std::vector<TimedPose> out;
  for (int i = 0; i < frames; ++i) {
    const double a = start_angle + step * i;
    const Eigen::Vector3d eye = center + radius * Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);
    out.push_back({i * period, look_at(eye, target)});
  }
  return out;
}

CameraIntrinsics vga_intrinsics(double depth_scale) {
  return CameraIntrinsics{525.0, 525.0, 319.5, 239.5, 640, 480, depth_scale};
}

namespace {

bool anchor_visible(const SyntheticScene& scene, int index, const Pose& pose, const CameraIntrinsics& k,
                    Eigen::Vector2d& pixel) {
  const Primitive& prim = scene.primitives[index];
  const Eigen::Vector3d q = pose.inverse() * prim.center;
  const auto px = try_project<double>(q, k);
  if (!px) return false;
  const Eigen::Vector3d dir = pose.rotation() * Eigen::Vector3d((px->x() - k.cx) / k.fx, (px->y() - k.cy) / k.fy, 1.0);
  const auto hit = raycast(scene, pose.translation(), dir);
  if (!hit || hit->primitive != index) return false;
  // Planes are visible only if the anchor itself is the first surface hit.
  if (prim.kind == Primitive::Kind::Plane && std::abs(hit->t - q.z()) > 1e-6 * std::max(1.0, q.z())) return false;
  pixel = *px;
  return true;
}

}  // namespace

std::vector<ScanpathSample> scanpath(const SyntheticScene& scene, const std::vector<TimedPose>& trajectory,
                                     const CameraIntrinsics& k, const ScanpathConfig& cfg, std::uint64_t seed) {
  if (trajectory.empty()) throw Error(ErrorCode::InvalidArgument, "scanpath needs a trajectory");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_int_distribution<int> duration(cfg.min_fixation, std::max(cfg.min_fixation, cfg.max_fixation));
  const Homography to_tracker = cfg.overlay.inverse();

  std::vector<ScanpathSample> out;
  int target = -1;
  int remaining = 0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const double t0 = trajectory[i].timestamp;
    const double period = i + 1 < trajectory.size() ? trajectory[i + 1].timestamp - t0
                          : i > 0                   ? t0 - trajectory[i - 1].timestamp
                                                    : 1.0 / 30.0;
    const Pose& pose = trajectory[i].pose;
    std::vector<std::pair<int, Eigen::Vector2d>> visible;
    for (int p = 0; p < static_cast<int>(scene.primitives.size()); ++p) {
      Eigen::Vector2d px;
      if (anchor_visible(scene, p, pose, k, px)) visible.emplace_back(p, px);
    }
    for (int s = 0; s < cfg.samples_per_frame; ++s) {
      ScanpathSample sample;
      sample.frame = static_cast<int>(i);
      sample.sample.timestamp = t0 + period * s / cfg.samples_per_frame;
      auto current = std::find_if(visible.begin(), visible.end(), [&](const auto& v) { return v.first == target; });
      if (remaining <= 0 || current == visible.end()) {
        if (visible.empty()) {
          target = -1;
          remaining = 0;
          out.push_back(sample);
          continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, visible.size() - 1);
        current = visible.begin() + static_cast<std::ptrdiff_t>(pick(rng));
        target = current->first;
        remaining = duration(rng);
      }
      --remaining;
      Eigen::Vector2d px = current->second;
      if (cfg.jitter_sigma > 0) px += cfg.jitter_sigma * Eigen::Vector2d(jitter(rng), jitter(rng));
      sample.sample.pixel = apply_homography(px, to_tracker);
      sample.sample.valid = true;
      sample.target = target;
      out.push_back(sample);
    }
  }
  return out;
}

std::vector<ScanpathSample> write_sequence(const std::filesystem::path& root, const SyntheticScene& scene,
                                           const std::vector<TimedPose>& trajectory, const CameraIntrinsics& k,
                                           const SequenceOptions& options, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "rgb");
  fs::create_directories(root / "depth");
  if (options.probability_maps) fs::create_directories(root / "prob");

  std::vector<std::string> names = options.class_names;
  if (names.empty()) {
    for (int c = 0; c < scene.num_classes; ++c) names.push_back("class_" + std::to_string(c));
  }
  if (static_cast<int>(names.size()) != scene.num_classes) {
    throw Error(ErrorCode::DimensionMismatch, "class-name table length differs from scene class count");
  }

  std::ofstream assoc(root / kAssociationsName);
  std::vector<TrajectoryEntry> truth;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "%06zu", i);
    const RenderedFrame r = render_frame(scene, trajectory[i].pose, k, trajectory[i].timestamp);
    write_rgb_png((root / "rgb" / (std::string(stem) + ".png")).string(), r.frame.rgb);
    write_depth_png((root / "depth" / (std::string(stem) + ".png")).string(), r.frame.depth);
    char ts[64];
    std::snprintf(ts, sizeof ts, "%.6f", trajectory[i].timestamp);
    assoc << ts << " rgb/" << stem << ".png depth/" << stem << ".png";
    if (options.probability_maps) {
      const ProbabilityFrame probs =
          noisy_probmap(r.true_class, scene.num_classes, options.accuracy, options.flip_rate, seed * 1000003ULL + i);
      write_probability_frame((root / "prob" / (std::string(stem) + ".pfrm")).string(), probs);
      assoc << " prob/" << stem << ".pfrm";
    }
    assoc << '\n';
    truth.push_back({trajectory[i].timestamp, trajectory[i].pose, false});
  }
  assoc.close();
  if (!assoc) throw Error(ErrorCode::WriteFailure, (root / kAssociationsName).string());

  const auto samples = scanpath(scene, trajectory, k, options.gaze, seed);
  std::vector<GazeSample> gaze;
  for (const auto& s : samples) gaze.push_back(s.sample);
  write_gaze_csv(root / "gaze.csv", gaze);
  {
    std::ofstream targets(root / "gaze_targets.csv");
    targets << "timestamp,frame,target\n";
    for (const auto& s : samples) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", s.sample.timestamp);
      targets << buf << ',' << s.frame << ',' << s.target << '\n';
    }
  }
  export_trajectory(root / "groundtruth.txt", truth);
  write_homography((root / "homography.txt").string(), options.gaze.overlay);
  write_class_names((root / "classes.txt").string(), names);
  {
    std::ofstream scene_out(root / "scene.txt");
    scene_out << format_scene(scene);
  }
  std::ofstream manifest(root / kManifestName);
  manifest << format_intrinsics(k) << "gaze=gaze.csv\ngroundtruth=groundtruth.txt\nhomography=homography.txt\n"
           << "classes=classes.txt\n";
  if (!manifest) throw Error(ErrorCode::WriteFailure, (root / kManifestName).string());
  return samples;
}

}  // namespace gazefusion::synth
