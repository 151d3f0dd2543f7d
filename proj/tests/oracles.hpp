#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the library code under test except for plain data types.

#include "gazefusion/geometry.hpp"
#include "gazefusion/surfel_map.hpp"
#include "gazefusion/synth.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace oracle {

using Real = boost::multiprecision::cpp_bin_float_50;

/// Floors each observation at `floor`, renormalizes it, multiplies into the
/// prior, and normalizes, all in 50-digit arithmetic.
inline std::vector<double> bayes_product(const std::vector<double>& prior,
                                         const std::vector<std::vector<double>>& observations,
                                         double floor = 1e-6) {
  std::vector<Real> post(prior.begin(), prior.end());
  for (const auto& obs : observations) {
    std::vector<Real> o(obs.size());
    Real sum = 0;
    for (std::size_t c = 0; c < obs.size(); ++c) {
      o[c] = std::max(obs[c], floor);
      sum += o[c];
    }
    for (std::size_t c = 0; c < obs.size(); ++c) post[c] *= o[c] / sum;
    Real total = 0;
    for (const auto& p : post) total += p;
    for (auto& p : post) p /= total;
  }
  std::vector<double> out;
  for (const auto& p : post) out.push_back(static_cast<double>(p));
  return out;
}

/// Exhaustive scan of the (2w+1)^2 window around the rounded pixel: nearest
/// occupied pixel by squared distance, then smaller depth, then smaller id.
inline gazefusion::SurfelId window_scan(const gazefusion::IndexMap& m, const Eigen::Vector2d& px, int w) {
  const int u0 = static_cast<int>(std::floor(px.x() + 0.5));
  const int v0 = static_cast<int>(std::floor(px.y() + 0.5));
  std::vector<std::tuple<long, double, gazefusion::SurfelId>> candidates;
  for (int v = 0; v < m.height(); ++v) {
    for (int u = 0; u < m.width(); ++u) {
      if (std::abs(u - u0) > w || std::abs(v - v0) > w) continue;
      gazefusion::SurfelId id = m.ids(u, v);
      double z = m.depth(u, v);
      if (id == gazefusion::kNoSurfel) {
        id = m.cover(u, v);
        z = m.cover_depth(u, v);
      }
      if (id == gazefusion::kNoSurfel) continue;
      candidates.emplace_back(long(u - u0) * (u - u0) + long(v - v0) * (v - v0), z, id);
    }
  }
  if (candidates.empty()) return gazefusion::kNoSurfel;
  return std::get<2>(*std::min_element(candidates.begin(), candidates.end()));
}

/// Pairwise union-find: every pair of points with equal label and distance
/// <= link is merged. Returns components as sorted index sets.
inline std::set<std::vector<std::size_t>> pairwise_components(const std::vector<Eigen::Vector3d>& points,
                                                               const std::vector<int>& labels, double link) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (labels[i] != labels[j]) continue;
      if ((points[i] - points[j]).norm() > link) continue;
      const std::size_t a = find(i), b = find(j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::set<std::vector<std::size_t>> out;
  for (auto& g : groups) {
    if (!g.empty()) out.insert(g);
  }
  return out;
}

/// Central difference of f along each coordinate of a 6-vector.
template <typename F>
Eigen::Matrix<double, 1, 6> central_difference(F&& f, double h) {
  Eigen::Matrix<double, 1, 6> d;
  for (int i = 0; i < 6; ++i) {
    gazefusion::Vector6d e = gazefusion::Vector6d::Zero();
    e[i] = h;
    d[i] = (f(e) - f(-e)) / (2 * h);
  }
  return d;
}

inline gazefusion::Pose random_pose(std::mt19937_64& rng, double max_translation = 1.0) {
  std::uniform_real_distribution<double> u(-1, 1);
  const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
  return {q.toRotationMatrix(), Eigen::Vector3d(u(rng), u(rng), u(rng)) * max_translation};
}

/// Random well-conditioned homography with unit bottom-right entry.
inline Eigen::Matrix3d random_homography(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> small(-0.2, 0.2);
  std::uniform_real_distribution<double> shift(-40, 40);
  std::uniform_real_distribution<double> persp(-2e-4, 2e-4);
  Eigen::Matrix3d h;
  h << 1 + small(rng), small(rng), shift(rng), small(rng), 1 + small(rng), shift(rng), persp(rng), persp(rng), 1;
  return h;
}

/// Straight homogeneous evaluation: multiply, then divide by the third entry.
inline Eigen::Vector2d homogeneous_apply(const Eigen::Matrix3d& h, const Eigen::Vector2d& p) {
  const double x = h(0, 0) * p.x() + h(0, 1) * p.y() + h(0, 2);
  const double y = h(1, 0) * p.x() + h(1, 1) * p.y() + h(1, 2);
  const double w = h(2, 0) * p.x() + h(2, 1) * p.y() + h(2, 2);
  return {x / w, y / w};
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Distance from a point to a primitive's surface, written from scratch.
inline double surface_distance(const gazefusion::synth::Primitive& p, const Eigen::Vector3d& x) {
  if (p.kind == gazefusion::synth::Primitive::Kind::Plane) return std::abs((x - p.center).dot(p.extent));
  const Eigen::Vector3d lo = p.center - 0.5 * p.extent;
  const Eigen::Vector3d hi = p.center + 0.5 * p.extent;
  const Eigen::Vector3d clamped = x.cwiseMax(lo).cwiseMin(hi);
  if ((clamped - x).norm() > 0) return (clamped - x).norm();
  double inside = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) inside = std::min({inside, x[i] - lo[i], hi[i] - x[i]});
  return inside;
}

/// Index of the primitive whose surface is closest to x; first on ties.
inline int nearest_primitive(const gazefusion::synth::SyntheticScene& scene, const Eigen::Vector3d& x) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const double d = surface_distance(scene.primitives[i], x);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gazefusion_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Exit status of a shell command, or -1 if it did not exit normally.
inline int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

}  // namespace oracle
