// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes. Optional arguments select criteria by number.

#include "gazefusion/gaze.hpp"
#include "gazefusion/instances.hpp"
#include "gazefusion/io.hpp"
#include "gazefusion/pipeline.hpp"
#include "gazefusion/semantic_fusion.hpp"
#include "gazefusion/synth.hpp"
#include "gazefusion/tracking.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace gazefusion;
namespace td = gazefusion::tracking_detail;

namespace {

constexpr double kDeg = M_PI / 180.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a named measurement against its bound.
  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

int cli(const std::string& args, const fs::path& log) {
  return oracle::run_command(std::string(GAZEFUSION_CLI) + " " + args + " > " + quoted(log) + " 2>&1");
}

std::vector<double> random_simplex(std::mt19937_64& rng, int k) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution zero(0.15);
  std::vector<double> p(k);
  double s = 0;
  for (auto& x : p) {
    x = zero(rng) ? 0.0 : e(rng);
    s += x;
  }
  if (s == 0) {
    p[0] = 1;
    s = 1;
  }
  for (auto& x : p) x /= s;
  return p;
}

// Primitive that most members of an instance lie on.
int instance_primitive(const ObjectInstance& inst, const SurfelMap& map, const synth::SyntheticScene& scene) {
  std::map<int, int> votes;
  for (SurfelId id : inst.members) {
    if (const Surfel* s = map.find(id)) ++votes[oracle::nearest_primitive(scene, s->position)];
  }
  int best = -1, count = 0;
  for (const auto& [prim, n] : votes) {
    if (n > count) {
      best = prim;
      count = n;
    }
  }
  return best;
}

// 1. Geometry.
void geometry(Outcome& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto k = synth::vga_intrinsics();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, k.width - 1e-3), v(0, k.height - 1e-3), z(0.1, 10.0);
  double worst_px = 0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector2d px(u(rng), v(rng));
    worst_px = std::max(worst_px, (project(backproject_metric<double>(px, z(rng), k), k) - px).norm());
  }
  out.expect(worst_px <= 1e-6, "round trip " + fmt("%.2e", worst_px) + " px <= 1e-6");

  std::uniform_real_distribution<double> sx(0, 640);
  double worst_h = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Matrix3d h = oracle::random_homography(rng);
    std::vector<PointPair> pairs;
    for (int i = 0; i < 8; ++i) {
      const Eigen::Vector2d s(sx(rng), sx(rng) * 0.75);
      pairs.push_back({s, oracle::homogeneous_apply(h, s)});
    }
    worst_h = std::max(worst_h, (calibrate_homography(pairs).homography.matrix() - h).cwiseAbs().maxCoeff());
  }
  out.expect(worst_h <= 1e-6, "homography recovery " + fmt("%.2e", worst_h) + " <= 1e-6");
  const double t = seconds_since(start);
  out.expect(t < 5, "runtime " + fmt("%.2f", t) + " s < 5");
}

// 2. Tracking.
void tracking(Outcome& out) {
  // Jacobians against central differences.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  auto rel = [](const td::Jacobian& a, const td::Jacobian& n) { return (a - n).norm() / std::max(n.norm(), 1e-12); };
  double worst_geo = 0;
  for (int i = 0; i < 100; ++i) {
    const Pose T = oracle::random_pose(rng);
    const Eigen::Vector3d p(u(rng), u(rng), 2 + u(rng));
    const Eigen::Vector3d q = T * p + 0.05 * Eigen::Vector3d(u(rng), u(rng), u(rng));
    const Eigen::Vector3d n = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    const auto numeric = oracle::central_difference(
        [&](const Vector6d& xi) { return td::point_to_plane_residual(T * Pose::exp(xi), p, q, n); }, 1e-6);
    worst_geo = std::max(worst_geo, rel(td::point_to_plane_jacobian(T, p, n), numeric));
  }
  const auto k = synth::vga_intrinsics();
  td::IntensityImage model{Image<float>(k.width, k.height)};
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      model.values(x, y) = static_cast<float>(0.5 + 0.3 * std::sin(0.05 * x + 0.02 * y) + 0.2 * std::cos(0.03 * y - 0.01 * x));
    }
  }
  double worst_photo = 0;
  for (int checked = 0; checked < 100;) {
    const Pose reference = oracle::random_pose(rng);
    Vector6d xi;
    xi << 0.02 * Eigen::Vector3d(u(rng), u(rng), u(rng)), 2 * kDeg * Eigen::Vector3d(u(rng), u(rng), u(rng));
    const Pose T = reference * Pose::exp(xi);
    const Eigen::Vector3d p = T.inverse() * (reference * (Eigen::Vector3d(0.6 * u(rng), 0.45 * u(rng), 1.0) * (2 + u(rng))));
    const Eigen::Vector3d q = reference.inverse() * (T * p);
    const double x = k.fx * q.x() / q.z() + k.cx, y = k.fy * q.y() / q.z() + k.cy;
    // Differences straddling a bilinear cell edge see a kink.
    if (std::abs(x - std::round(x)) < 1e-3 || std::abs(y - std::round(y)) < 1e-3) continue;
    const auto analytic = td::photometric_jacobian(T, reference, p, model, k);
    if (!analytic) continue;
    const auto numeric = oracle::central_difference(
        [&](const Vector6d& e) { return *td::photometric_residual(T * Pose::exp(e), reference, p, 0.3, model, k); }, 1e-7);
    worst_photo = std::max(worst_photo, rel(*analytic, numeric));
    ++checked;
  }
  out.expect(worst_geo <= 1e-5 && worst_photo <= 1e-5,
             "jacobian rel err " + fmt("%.1e", std::max(worst_geo, worst_photo)) + " <= 1e-5");

  // 100-frame orbit of the room at VGA.
  oracle::TempDir dir("accept_track");
  const auto traj = synth::orbit({0, 0, 1.2}, 2.2, 0, 0.0045, 100, {0, 0, 0.5});
  double max_step_t = 0, max_step_r = 0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const auto [dt, dr] = pose_difference(traj[i - 1].pose, traj[i].pose);
    max_step_t = std::max(max_step_t, dt);
    max_step_r = std::max(max_step_r, dr);
  }
  out.expect(max_step_t <= 0.01 && max_step_r <= kDeg, "orbit step " + fmt("%.4f", max_step_t) + " m / " +
                                                           fmt("%.3f", max_step_r / kDeg) + " deg");
  synth::SequenceOptions opts;
  opts.probability_maps = false;
  synth::write_sequence(dir.path(), synth::room_scene(), traj, k, opts, 2);
  PipelineConfig config;
  config.pose_source = PoseSource::Tracked;
  const auto start = std::chrono::steady_clock::now();
  const auto result = run_pipeline(load_sequence(dir.path()), config);
  const double t = seconds_since(start);

  double sq = 0, worst_rot = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto [dt, dr] = pose_difference(result.tracking[i].pose, traj[i].pose);
    sq += dt * dt;
    worst_rot = std::max(worst_rot, dr);
  }
  const double ate = std::sqrt(sq / double(traj.size()));
  out.expect(result.summary.lost_frames == 0, "lost " + std::to_string(result.summary.lost_frames));
  out.expect(ate <= 0.005, "ATE " + fmt("%.3f", ate * 1000) + " mm <= 5");
  out.expect(worst_rot <= 0.2 * kDeg, "max rot err " + fmt("%.4f", worst_rot / kDeg) + " deg <= 0.2");
  out.expect(t < 300, "runtime " + fmt("%.1f", t) + " s < 300");
}

// 3. Semantic fusion.
void fusion(Outcome& out) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> kd(2, 5), nd(1, 10);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = kd(rng);
    auto prior = random_simplex(rng, k);
    for (auto& p : prior) p = std::max(p, 1e-3);
    const double s = std::accumulate(prior.begin(), prior.end(), 0.0);
    for (auto& p : prior) p /= s;
    std::vector<std::vector<double>> obs;
    ClassDistribution d = ClassDistribution::from_probabilities(Eigen::Map<Eigen::VectorXd>(prior.data(), k));
    for (int i = nd(rng); i > 0; --i) {
      obs.push_back(random_simplex(rng, k));
      d = bayes_update(d, obs.back());
    }
    const auto expected = oracle::bayes_product(prior, obs);
    const Eigen::VectorXd got = d.probabilities();
    for (int c = 0; c < k; ++c) worst = std::max(worst, std::abs(got[c] - expected[c]));
  }
  out.expect(worst <= 1e-9, "oracle diff " + fmt("%.1e", worst) + " <= 1e-9");

  oracle::TempDir dir("accept_fusion");
  const auto scene = synth::room_scene();
  const auto traj = synth::orbit({0, 0, 1.2}, 2.2, 0, 0.0045, 50, {0, 0, 0.5});
  synth::SequenceOptions opts;
  opts.accuracy = 0.4;
  opts.flip_rate = 0.2;
  synth::write_sequence(dir.path(), scene, traj, synth::vga_intrinsics(), opts, 3);
  PipelineConfig config;
  config.pose_source = PoseSource::GroundTruth;
  const auto result = run_pipeline(load_sequence(dir.path()), config);
  std::size_t stable = 0, correct = 0;
  for (const auto& s : result.map.surfels()) {
    if (s.confidence < result.map.config().stable_confidence) continue;
    ++stable;
    correct += surfel_class(s).first == scene.primitives[oracle::nearest_primitive(scene, s.position)].class_index;
  }
  const double frac = stable ? double(correct) / double(stable) : 0.0;
  out.expect(result.map.num_classes() == 10, "K " + std::to_string(result.map.num_classes()));
  out.expect(stable > 1000 && frac >= 0.95,
             "correct argmax " + fmt("%.4f", frac) + " of " + std::to_string(stable) + " stable >= 0.95");
}

// 4. Gaze.
void gaze(Outcome& out) {
  oracle::TempDir dir("accept_gaze");
  const auto scene = synth::room_scene();
  const auto traj = synth::orbit({0, 0, 1.2}, 2.2, 0, 0.0045, 50, {0, 0, 0.5});
  synth::SequenceOptions opts;
  opts.gaze.jitter_sigma = 0;
  const auto samples = synth::write_sequence(dir.path(), scene, traj, synth::vga_intrinsics(), opts, 4);
  PipelineConfig config;
  config.pose_source = PoseSource::GroundTruth;
  const auto result = run_pipeline(load_sequence(dir.path()), config);

  std::map<InstanceId, int> primitive_of;
  for (const auto& inst : result.instances) primitive_of[inst.id] = instance_primitive(inst, result.map, scene);
  std::vector<synth::ScanpathSample> valid;
  for (const auto& s : samples) {
    if (s.sample.valid) valid.push_back(s);
  }
  std::size_t matched = 0;
  bool aligned = valid.size() == result.gaze.size() && !valid.empty();
  for (std::size_t i = 0; aligned && i < valid.size(); ++i) {
    const GazeHit& h = result.gaze[i];
    if (std::abs(h.timestamp - valid[i].sample.timestamp) > 1e-6) aligned = false;
    if (h.instance && primitive_of.count(*h.instance) && primitive_of[*h.instance] == valid[i].target) ++matched;
  }
  out.expect(aligned, std::to_string(valid.size()) + " samples");
  const double frac = valid.empty() ? 0.0 : double(matched) / double(valid.size());
  out.expect(frac >= 0.99, "instance matches target " + fmt("%.4f", frac) + " >= 0.99");

  // Window fallback against the exhaustive scan.
  SurfelMap map(3);
  for (int i = 0; i < 40; ++i) {
    Surfel s;
    s.position = {0.01 * i, -0.02 * i, 1 + 0.001 * i};
    s.normal = {0, 0, -1};
    s.radius = 0.002;
    s.confidence = 1;
    s.labels = ClassDistribution::uniform(3);
    map.add(s);
  }
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> density(0.0, 0.08), pos(-3.0, 34.0);
  std::uniform_int_distribution<int> id(0, 39), level(1, 4);
  std::bernoulli_distribution center(0.5);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    IndexMap m{Image<SurfelId>(32, 24, kNoSurfel), Image<double>(32, 24, 0.0), Image<SurfelId>(32, 24, kNoSurfel),
               Image<double>(32, 24, 0.0)};
    std::bernoulli_distribution occupied(density(rng));
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 32; ++x) {
        if (!occupied(rng)) continue;
        if (center(rng)) {
          m.ids(x, y) = static_cast<SurfelId>(id(rng));
          m.depth(x, y) = 0.5 * level(rng);
        } else {
          m.cover(x, y) = static_cast<SurfelId>(id(rng));
          m.cover_depth(x, y) = 0.5 * level(rng);
        }
      }
    }
    Eigen::Vector2d px(pos(rng), pos(rng) * 0.75);
    px = px.cwiseMax(Eigen::Vector2d(-0.49, -0.49)).cwiseMin(Eigen::Vector2d(31.49, 23.49));
    if (locate_gaze(px, m, map).surfel != oracle::window_scan(m, px, kGazeWindow)) ++mismatches;
  }
  out.expect(mismatches == 0, "window scan mismatches " + std::to_string(mismatches) + "/1000");
}

// 5. Instances.
void instances(Outcome& out) {
  constexpr int kClasses = 4;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> count(1, 500), cls(0, kClasses - 1);
  std::uniform_real_distribution<double> extent(0.2, 2.0), conf(0, 25);
  int wrong = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double e = extent(rng);
    std::uniform_real_distribution<double> coord(-e, e);
    SurfelMap map(kClasses);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      Surfel s;
      s.position = {coord(rng), coord(rng), coord(rng) * 0.3};
      s.normal = {0, 0, 1};
      s.radius = 0.002;
      s.confidence = conf(rng);
      Eigen::VectorXd probs = Eigen::VectorXd::Constant(kClasses, 1.0);
      probs[cls(rng)] = 5;
      s.labels = ClassDistribution::from_probabilities(probs);
      map.add(s);
    }
    std::vector<Eigen::Vector3d> points;
    std::vector<int> labels;
    std::vector<SurfelId> ids;
    for (const auto& s : map.surfels()) {
      if (s.confidence < map.config().stable_confidence) continue;
      points.push_back(s.position);
      labels.push_back(surfel_class(s).first);
      ids.push_back(s.id);
    }
    std::set<std::vector<SurfelId>> expected, actual;
    for (const auto& comp : oracle::pairwise_components(points, labels, 0.1)) {
      std::vector<SurfelId> members;
      for (std::size_t i : comp) members.push_back(ids[i]);
      expected.insert(members);
    }
    for (const auto& inst : extract_instances(map, 1)) actual.insert(inst.members);
    wrong += actual != expected;
  }
  out.expect(wrong == 0, "component mismatches " + std::to_string(wrong) + "/200");

  // Look at a box, look away from it for 30 frames, then look back.
  const auto scene = synth::room_scene();
  const int target = 4;
  const Eigen::Vector3d box = scene.primitives[target].center;
  const auto k = synth::vga_intrinsics();
  std::vector<Pose> poses;
  for (int i = 0; i < 20; ++i) poses.push_back(synth::look_at({2.0, 1.5 - 0.01 * i, 1.6}, box));
  for (int i = 0; i < 30; ++i) poses.push_back(synth::look_at({2.0, 1.3, 1.6}, {3.0, 1.3 + 0.02 * i, 1.4}));
  for (int i = 0; i < 20; ++i) poses.push_back(synth::look_at({2.0, 1.3 + 0.01 * i, 1.6}, box));

  SurfelMap map(scene.num_classes);
  InstanceRegistry registry;
  std::optional<InstanceId> before, after;
  bool hidden = true;
  auto target_instance = [&]() -> std::optional<InstanceId> {
    for (const auto& inst : registry.active()) {
      if (inst.class_index == scene.primitives[target].class_index && instance_primitive(inst, map, scene) == target) {
        return inst.id;
      }
    }
    return std::nullopt;
  };
  for (std::size_t i = 0; i < poses.size(); ++i) {
    auto r = synth::render_frame(scene, poses[i], k, double(i) / 30);
    if (i >= 20 && i < 50) {
      for (std::size_t p = 0; p < r.primitive.size(); ++p) hidden = hidden && r.primitive[p] != target;
    }
    r.frame.probabilities = synth::noisy_probmap(r.true_class, scene.num_classes, 0.8, 0.05, 500 + i);
    integrate(map, r.frame, poses[i], k);
    fuse_frame(map, gate_index_map(render_index_map(map, poses[i], k), map, r.frame.depth, poses[i], k),
               *r.frame.probabilities);
    if ((i + 1) % 10 == 0) {
      prune(map, map.frame());
      registry.update(map);
    }
    if (i + 1 == 20) before = target_instance();
    if (i + 1 == 70) after = target_instance();
  }
  out.expect(hidden, "target outside view for 30 frames");
  out.expect(before && after && *before == *after,
             "instance " + (before ? std::to_string(*before) : std::string("none")) + " -> " +
                 (after ? std::to_string(*after) : std::string("none")));
}

// 6. Determinism.
void determinism(Outcome& out) {
  oracle::TempDir dir("accept_det");
  const fs::path log = dir / "log.txt";
  bool ok = cli("synth --frames 20 --seed 6 --output-dir " + quoted(dir / "a"), log) == 0 &&
            cli("synth --frames 20 --seed 6 --output-dir " + quoted(dir / "b"), log) == 0;
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), dir / "a");
    differing += oracle::read_bytes(e.path()) != oracle::read_bytes(dir / "b" / rel);
  }
  out.expect(ok && files > 60 && differing == 0,
             "synth inputs identical (" + std::to_string(files - differing) + "/" + std::to_string(files) + ")");

  const std::string run = "run " + quoted(dir / "a") + " --pose-source tracked --seed 6 --output-dir ";
  ok = cli(run + quoted(dir / "run1"), log) == 0 && cli(run + quoted(dir / "run2"), log) == 0;
  std::size_t same = 0;
  const std::vector<const char*> names = {kPlyRgbName, kPlyClassName, kTrajectoryName, kGazeEventsName, kInstancesName};
  for (const char* name : names) {
    const auto a = oracle::read_bytes(dir / "run1" / name);
    same += !a.empty() && a == oracle::read_bytes(dir / "run2" / name);
  }
  out.expect(ok && same == names.size(), "exports identical " + std::to_string(same) + "/" + std::to_string(names.size()));
}

// 7. I/O.
void io(Outcome& out) {
  oracle::TempDir dir("accept_io");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5, 5), r(0.001, 0.05), c(0, 30);
  std::uniform_int_distribution<int> byte(0, 255);
  SurfelMap map(6);
  for (int i = 0; i < 5000; ++i) {
    Surfel s;
    s.position = {u(rng), u(rng), u(rng)};
    s.normal = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    s.color = Rgb(byte(rng), byte(rng), byte(rng));
    s.radius = r(rng);
    s.confidence = c(rng);
    Eigen::VectorXd p(6);
    for (int j = 0; j < 6; ++j) p[j] = 0.1 + std::abs(u(rng));
    s.labels = ClassDistribution::from_probabilities(p);
    if (i % 3 == 0) s.instance = static_cast<InstanceId>(1 + i % 17);
    map.add(s);
  }
  export_ply(map, Palette::Rgb, dir / "m.ply");
  const auto back = read_ply(dir / "m.ply");
  std::size_t exact = 0;
  for (std::size_t i = 0; i < back.size() && back.size() == map.size(); ++i) {
    const Surfel& s = map.surfels()[i];
    exact += back[i].position == s.position.cast<float>() && back[i].normal == s.normal.cast<float>() &&
             back[i].color == s.color && back[i].radius == static_cast<float>(s.radius) &&
             back[i].confidence == static_cast<float>(s.confidence) &&
             back[i].class_index == surfel_class(s).first && back[i].instance == s.instance.value_or(0);
  }
  out.expect(exact == map.size(), "PLY exact " + std::to_string(exact) + "/" + std::to_string(map.size()));

  // Trajectory compared in its written parameters: translation and unit
  // quaternion with w >= 0.
  std::vector<TrajectoryEntry> traj;
  for (int i = 0; i < 1000; ++i) traj.push_back({0.01 * i, oracle::random_pose(rng, 5.0), false});
  export_trajectory(dir / "t.txt", traj);
  const auto tback = read_trajectory(dir / "t.txt");
  double worst = tback.size() == traj.size() ? 0.0 : 1.0;
  for (std::size_t i = 0; i < tback.size() && i < traj.size(); ++i) {
    Eigen::Quaterniond qa(traj[i].pose.rotation()), qb(tback[i].pose.rotation());
    if (qa.w() < 0) qa.coeffs() *= -1;
    if (qb.w() < 0) qb.coeffs() *= -1;
    worst = std::max({worst, (tback[i].pose.translation() - traj[i].pose.translation()).cwiseAbs().maxCoeff(),
                      (qa.coeffs() - qb.coeffs()).cwiseAbs().maxCoeff(), std::abs(tback[i].timestamp - traj[i].timestamp)});
  }
  out.expect(worst <= 1e-6, "trajectory " + fmt("%.1e", worst) + " <= 1e-6");

  // Malformed sequences through the command line.
  const fs::path log = dir / "log.txt";
  const fs::path good = dir / "seq";
  if (cli("synth --frames 3 --seed 7 --output-dir " + quoted(good), log) != 0) {
    out.expect(false, "synth failed");
    return;
  }
  const auto assoc = oracle::read_bytes(good / kAssociationsName);
  const auto manifest = oracle::read_bytes(good / kManifestName);
  auto put = [](const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::trunc) << text; };
  const auto first_line_end = assoc.find('\n');
  const auto second_line_end = assoc.find('\n', first_line_end + 1);
  const std::string line0 = assoc.substr(0, first_line_end + 1);
  const std::string line1 = assoc.substr(first_line_end + 1, second_line_end - first_line_end);
  const std::vector<std::pair<std::string, std::function<void()>>> cases = {
      {"missing manifest", [&] { fs::remove(good / kManifestName); }},
      {"unknown manifest key", [&] { put(good / kManifestName, manifest + "colour=blue\n"); }},
      {"bad intrinsics", [&] { put(good / kManifestName, "fx=abc\n"); }},
      {"timestamps out of order", [&] { put(good / kAssociationsName, line1 + line0); }},
      {"path outside root", [&] { put(good / kAssociationsName, "0.0 ../x.png depth/000000.png\n"); }},
      {"missing frame", [&] { fs::remove(good / "depth" / "000001.png"); }},
      {"missing associations", [&] { fs::remove(good / kAssociationsName); }},
  };
  int rejected = 0;
  for (const auto& [name, damage] : cases) {
    put(good / kManifestName, manifest);
    put(good / kAssociationsName, assoc);
    if (!fs::exists(good / "depth" / "000001.png")) {
      fs::copy_file(good / "depth" / "000000.png", good / "depth" / "000001.png");
    }
    damage();
    const fs::path exports = dir / "out";
    const int rc = cli("run " + quoted(good) + " --pose-source groundtruth --output-dir " + quoted(exports), log);
    if (rc == 3 && !fs::exists(exports)) {
      ++rejected;
    } else {
      out.expect(false, name + " gave " + std::to_string(rc));
    }
    fs::remove_all(exports);
  }
  out.expect(rejected == int(cases.size()),
             "malformed rejected with exit 3: " + std::to_string(rejected) + "/" + std::to_string(cases.size()));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"geometry", geometry}, {"tracking", tracking},       {"fusion", fusion}, {"gaze", gaze},
      {"instances", instances}, {"determinism", determinism}, {"io", io},
  };
  int failed = 0;
  std::set<std::size_t> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::stoul(argv[a]));
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(out);
    } catch (const std::exception& e) {
      out.expect(false, std::string("exception: ") + e.what());
    }
    failed += !out.pass;
    std::printf("%s criterion %zu %s (%.1f s): %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(start), out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
