#include "gazefusion/instances.hpp"

#include "gazefusion/semantic_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <unordered_set>

namespace gazefusion {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

int current_frame(const SurfelMap& map) { return std::max(0, map.frame() - 1); }

bool centroid_less(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

}  // namespace

std::vector<ObjectInstance> extract_instances(const SurfelMap& map, std::size_t min_size, double link_distance) {
  const auto& surfels = map.surfels();
  const double stable = map.config().stable_confidence;
  std::vector<int> classes(surfels.size(), -1);
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    if (surfels[i].confidence >= stable) classes[i] = surfel_class(surfels[i]).first;
  }
  // Bucket by (cell, class) with cells small enough that any two points in
  // one cell are within link_distance; buckets are then joined pairwise with
  // an early exit once a linking pair is found or they already share a set.
  const double cell = link_distance / std::sqrt(3.0) * (1.0 - 1e-9);
  struct Key {
    std::int64_t x, y, z;
    int cls;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = static_cast<std::size_t>(k.x) * 73856093u;
      h ^= static_cast<std::size_t>(k.y) * 19349663u;
      h ^= static_cast<std::size_t>(k.z) * 83492791u;
      return h ^ static_cast<std::size_t>(k.cls) * 2654435761u;
    }
  };
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets;
  std::vector<Key> order;
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    if (classes[i] < 0) continue;
    const Eigen::Vector3d& p = surfels[i].position;
    const Key key{static_cast<std::int64_t>(std::floor(p.x() / cell)), static_cast<std::int64_t>(std::floor(p.y() / cell)),
                  static_cast<std::int64_t>(std::floor(p.z() / cell)), classes[i]};
    auto [it, inserted] = buckets.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(i);
  }

  DisjointSets sets(surfels.size());
  for (const Key& key : order) {
    const auto& members = buckets.at(key);
    for (std::size_t m = 1; m < members.size(); ++m) sets.unite(members.front(), members[m]);
  }
  const double d2 = link_distance * link_distance;
  const int reach = static_cast<int>(std::ceil(link_distance / cell));
  for (const Key& key : order) {
    const auto& a = buckets.at(key);
    for (int dx = -reach; dx <= reach; ++dx) {
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dz = -reach; dz <= reach; ++dz) {
          // Visit each unordered pair of buckets once.
          if (std::make_tuple(dx, dy, dz) <= std::make_tuple(0, 0, 0)) continue;
          const double gx = std::max(std::abs(dx) - 1, 0) * cell;
          const double gy = std::max(std::abs(dy) - 1, 0) * cell;
          const double gz = std::max(std::abs(dz) - 1, 0) * cell;
          if (gx * gx + gy * gy + gz * gz > d2) continue;
          const auto it = buckets.find(Key{key.x + dx, key.y + dy, key.z + dz, key.cls});
          if (it == buckets.end()) continue;
          const auto& b = it->second;
          if (sets.find(a.front()) == sets.find(b.front())) continue;
          bool linked = false;
          for (std::size_t i : a) {
            for (std::size_t j : b) {
              if ((surfels[i].position - surfels[j].position).squaredNorm() <= d2) {
                sets.unite(i, j);
                linked = true;
                break;
              }
            }
            if (linked) break;
          }
        }
      }
    }
  }

  std::vector<std::vector<std::size_t>> groups(surfels.size());
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    if (classes[i] >= 0) groups[sets.find(i)].push_back(i);
  }
  const int frame = current_frame(map);
  std::vector<ObjectInstance> out;
  for (const auto& g : groups) {
    if (g.empty() || g.size() < min_size) continue;
    ObjectInstance inst;
    inst.class_index = classes[g.front()];
    inst.first_seen = inst.last_seen = frame;
    for (std::size_t i : g) {
      inst.members.push_back(surfels[i].id);
      inst.centroid += surfels[i].position;
      inst.bounds.extend(surfels[i].position);
    }
    inst.centroid /= static_cast<double>(g.size());
    out.push_back(std::move(inst));
  }
  std::sort(out.begin(), out.end(), [](const ObjectInstance& a, const ObjectInstance& b) {
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    return a.members.front() < b.members.front();
  });
  return out;
}

InstanceMatch match_instances(std::span<const ObjectInstance> previous, std::span<const ObjectInstance> current,
                              InstanceId& next_id, double min_overlap) {
  std::unordered_map<SurfelId, std::size_t> owner;
  for (std::size_t p = 0; p < previous.size(); ++p) {
    for (SurfelId s : previous[p].members) owner.emplace(s, p);
  }
  struct Candidate {
    std::size_t overlap, prev, cur;
  };
  std::vector<Candidate> candidates;
  for (std::size_t c = 0; c < current.size(); ++c) {
    std::unordered_map<std::size_t, std::size_t> counts;
    for (SurfelId s : current[c].members) {
      const auto it = owner.find(s);
      if (it != owner.end()) ++counts[it->second];
    }
    for (const auto& [p, n] : counts) {
      if (previous[p].class_index != current[c].class_index) continue;
      const double smaller = static_cast<double>(std::min(previous[p].members.size(), current[c].members.size()));
      if (static_cast<double>(n) >= min_overlap * smaller) candidates.push_back({n, p, c});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (previous[a.prev].id != previous[b.prev].id) return previous[a.prev].id < previous[b.prev].id;
    if (current[a.cur].centroid != current[b.cur].centroid) {
      return centroid_less(current[a.cur].centroid, current[b.cur].centroid);
    }
    return a.cur < b.cur;
  });

  InstanceMatch match{std::vector<InstanceId>(current.size(), 0),
                      std::vector<std::optional<std::size_t>>(current.size())};
  std::vector<bool> prev_used(previous.size(), false);
  for (const auto& c : candidates) {
    if (prev_used[c.prev] || match.previous[c.cur]) continue;
    prev_used[c.prev] = true;
    match.previous[c.cur] = c.prev;
    match.ids[c.cur] = previous[c.prev].id;
  }
  for (std::size_t c = 0; c < current.size(); ++c) {
    if (!match.previous[c]) match.ids[c] = next_id++;
  }
  return match;
}

const std::vector<ObjectInstance>& InstanceRegistry::update(SurfelMap& map) {
  update(extract_instances(map, config_.min_size, config_.link_distance), current_frame(map));
  for (auto& s : map.mutable_surfels()) s.instance.reset();
  for (const auto& inst : active_) {
    for (SurfelId id : inst.members) {
      if (Surfel* s = map.find(id)) s->instance = inst.id;
    }
  }
  return active_;
}

const std::vector<ObjectInstance>& InstanceRegistry::update(std::vector<ObjectInstance> current, int frame) {
  std::vector<ObjectInstance> previous = active_;
  previous.insert(previous.end(), dormant_.begin(), dormant_.end());
  const InstanceMatch match = match_instances(previous, current, next_id_, config_.min_overlap);

  std::vector<bool> prev_used(previous.size(), false);
  for (std::size_t c = 0; c < current.size(); ++c) {
    current[c].id = match.ids[c];
    current[c].last_seen = frame;
    if (match.previous[c]) {
      prev_used[*match.previous[c]] = true;
      current[c].first_seen = previous[*match.previous[c]].first_seen;
    } else {
      current[c].first_seen = frame;
    }
  }
  std::vector<ObjectInstance> dormant;
  for (std::size_t p = 0; p < previous.size(); ++p) {
    if (!prev_used[p]) dormant.push_back(std::move(previous[p]));
  }
  if (dormant.size() > config_.dormant_capacity) {
    std::sort(dormant.begin(), dormant.end(), [](const ObjectInstance& a, const ObjectInstance& b) {
      return std::tie(b.last_seen, a.id) < std::tie(a.last_seen, b.id);
    });
    dormant.resize(config_.dormant_capacity);
  }
  std::sort(dormant.begin(), dormant.end(), [](const ObjectInstance& a, const ObjectInstance& b) { return a.id < b.id; });
  active_ = std::move(current);
  dormant_ = std::move(dormant);
  rebuild_lookup();
  return active_;
}

std::vector<ObjectInstance> InstanceRegistry::all() const {
  std::vector<ObjectInstance> out = active_;
  out.insert(out.end(), dormant_.begin(), dormant_.end());
  std::sort(out.begin(), out.end(), [](const ObjectInstance& a, const ObjectInstance& b) { return a.id < b.id; });
  return out;
}

void InstanceRegistry::rebuild_lookup() {
  lookup_.clear();
  for (const auto& inst : active_) {
    for (SurfelId s : inst.members) lookup_.emplace(s, inst.id);
  }
  for (const auto& inst : dormant_) {
    for (SurfelId s : inst.members) lookup_.emplace(s, inst.id);
  }
}

std::optional<InstanceId> InstanceRegistry::instance_of(SurfelId surfel) const {
  const auto it = lookup_.find(surfel);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

const ObjectInstance* InstanceRegistry::find(InstanceId id) const {
  for (const auto& inst : active_) {
    if (inst.id == id) return &inst;
  }
  for (const auto& inst : dormant_) {
    if (inst.id == id) return &inst;
  }
  return nullptr;
}

}  // namespace gazefusion
