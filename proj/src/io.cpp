#include "gazefusion/io.hpp"

#include "gazefusion/key_value.hpp"
#include "gazefusion/semantic_fusion.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace gazefusion {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::string(trim(cur)));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::string(trim(cur)));
  return out;
}

// Resolves a manifest-relative path and rejects anything escaping root.
fs::path resolve_inside(const fs::path& root, const std::string& relative) {
  const fs::path rel(relative);
  if (relative.empty() || rel.is_absolute()) {
    throw Error(ErrorCode::MalformedManifest, "path must be relative to the sequence root: '" + relative + "'");
  }
  const fs::path base = fs::weakly_canonical(root);
  const fs::path full = fs::weakly_canonical(base / rel);
  const auto mismatch = std::mismatch(base.begin(), base.end(), full.begin(), full.end());
  if (mismatch.first != base.end()) {
    throw Error(ErrorCode::MalformedManifest, "path escapes the sequence root: '" + relative + "'");
  }
  return full;
}

fs::path existing(const fs::path& root, const std::string& relative) {
  fs::path p = resolve_inside(root, relative);
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingFile, p.string());
  return p;
}

std::string format_fixed(double value) {
  if (std::abs(value) < 5e-7) value = 0.0;  // avoid "-0.000000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::WriteFailure, path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::WriteFailure, path.string());
}

}  // namespace

SequenceManifest load_sequence(const fs::path& root) {
  const fs::path manifest_path = root / kManifestName;
  if (!fs::is_regular_file(manifest_path)) {
    throw Error(ErrorCode::MalformedManifest, "no manifest at " + manifest_path.string());
  }
  const auto kv = KeyValueFile::read(manifest_path.string(), ErrorCode::MalformedManifest);
  static const std::set<std::string> known = {"fx",  "fy",          "cx",         "cy",      "width",
                                              "height", "depth_scale", "gaze", "groundtruth", "homography",
                                              "classes"};
  for (const auto& [key, value] : kv.values()) {
    if (!known.count(key)) throw Error(ErrorCode::MalformedManifest, "unknown manifest key '" + key + "'");
  }

  SequenceManifest m;
  m.root = root;
  std::ostringstream intrinsics;
  for (const char* key : {"fx", "fy", "cx", "cy", "width", "height", "depth_scale"}) {
    intrinsics << key << '=' << kv.get(key) << '\n';
  }
  m.intrinsics = parse_intrinsics(intrinsics.str());
  if (kv.has("gaze")) m.gaze = existing(root, kv.get("gaze"));
  if (kv.has("groundtruth")) m.groundtruth = existing(root, kv.get("groundtruth"));
  if (kv.has("homography")) m.homography = existing(root, kv.get("homography"));
  if (kv.has("classes")) m.classes = existing(root, kv.get("classes"));

  const fs::path assoc_path = root / kAssociationsName;
  std::ifstream in(assoc_path);
  if (!in) throw Error(ErrorCode::MalformedManifest, "no associations file at " + assoc_path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != 3 && tokens.size() != 4) {
      throw Error(ErrorCode::MalformedManifest, "associations line " + std::to_string(line_no) + ": expected 3 or 4 fields");
    }
    Association a;
    a.timestamp = parse_double(tokens[0], ErrorCode::MalformedManifest);
    if (!m.associations.empty() && !(a.timestamp > m.associations.back().timestamp)) {
      throw Error(ErrorCode::NonMonotonicTimestamps, "associations line " + std::to_string(line_no));
    }
    a.rgb = existing(root, tokens[1]);
    a.depth = existing(root, tokens[2]);
    if (tokens.size() == 4) a.probabilities = existing(root, tokens[3]);
    m.associations.push_back(std::move(a));
  }
  if (m.associations.empty()) throw Error(ErrorCode::MalformedManifest, "sequence has no frames");
  return m;
}

Frame load_frame(const SequenceManifest& manifest, std::size_t i) {
  const Association& a = manifest.associations.at(i);
  Frame f;
  f.timestamp = a.timestamp;
  f.rgb = read_rgb_png(a.rgb.string());
  f.depth = read_depth_png(a.depth.string());
  const auto& k = manifest.intrinsics;
  if (f.rgb.width() != k.width || f.rgb.height() != k.height || f.depth.width() != k.width ||
      f.depth.height() != k.height) {
    throw Error(ErrorCode::DimensionMismatch, "frame " + std::to_string(i) + " does not match the intrinsics");
  }
  if (a.probabilities) f.probabilities = read_probability_frame(a.probabilities->string());
  return f;
}

std::vector<GazeSample> read_gaze_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"timestamp", "x", "y", "valid"}) {
    throw Error(ErrorCode::MalformedManifest, "gaze CSV must start with header timestamp,x,y,valid");
  }
  std::vector<GazeSample> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw Error(ErrorCode::MalformedManifest, "gaze CSV row needs 4 fields: " + line);
    GazeSample s;
    s.timestamp = parse_double(f[0], ErrorCode::MalformedManifest);
    s.pixel = {parse_double(f[1], ErrorCode::MalformedManifest), parse_double(f[2], ErrorCode::MalformedManifest)};
    if (f[3] != "0" && f[3] != "1") throw Error(ErrorCode::MalformedManifest, "gaze valid flag must be 0 or 1");
    s.valid = f[3] == "1";
    if (!out.empty() && s.timestamp < out.back().timestamp) {
      throw Error(ErrorCode::NonMonotonicTimestamps, "gaze CSV timestamps must not decrease");
    }
    out.push_back(s);
  }
  return out;
}

void write_gaze_csv(const fs::path& path, std::span<const GazeSample> samples) {
  auto out = open_out(path);
  out << "timestamp,x,y,valid\n";
  for (const auto& s : samples) {
    out << format_fixed(s.timestamp) << ',' << format_fixed(s.pixel.x()) << ',' << format_fixed(s.pixel.y()) << ','
        << (s.valid ? 1 : 0) << '\n';
  }
  finish(out, path);
}

std::vector<PointPair> read_point_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<PointPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split_ws(line);
    if (f.size() != 4) throw Error(ErrorCode::MalformedManifest, "calibration line needs 4 values: " + line);
    PointPair p;
    p.source = {parse_double(f[0], ErrorCode::MalformedManifest), parse_double(f[1], ErrorCode::MalformedManifest)};
    p.target = {parse_double(f[2], ErrorCode::MalformedManifest), parse_double(f[3], ErrorCode::MalformedManifest)};
    pairs.push_back(p);
  }
  return pairs;
}

std::string format_tum_line(double timestamp, const Pose& pose) {
  Eigen::Quaterniond q(pose.rotation());
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1;
  const auto& t = pose.translation();
  std::string line = format_fixed(timestamp);
  for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) line += ' ' + format_fixed(v);
  return line;
}

std::pair<double, Pose> parse_tum_line(const std::string& line) {
  const auto f = split_ws(line);
  if (f.size() != 8) throw Error(ErrorCode::MalformedManifest, "TUM line needs 8 fields: " + line);
  double v[8];
  for (int i = 0; i < 8; ++i) v[i] = parse_double(f[i], ErrorCode::MalformedManifest);
  Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
  if (!(q.norm() > 0)) throw Error(ErrorCode::MalformedManifest, "zero quaternion in TUM line");
  q.normalize();
  return {v[0], Pose(q.toRotationMatrix(), Eigen::Vector3d(v[1], v[2], v[3]))};
}

void export_trajectory(const fs::path& path, std::span<const TrajectoryEntry> trajectory) {
  auto out = open_out(path);
  for (const auto& e : trajectory) out << format_tum_line(e.timestamp, e.pose) << '\n';
  finish(out, path);
}

std::vector<TrajectoryEntry> read_trajectory(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<TrajectoryEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto [ts, pose] = parse_tum_line(line);
    out.push_back({ts, pose, false});
  }
  return out;
}

Rgb class_color(int class_index, const std::vector<std::string>& class_names) {
  if (class_index >= 0 && class_index < static_cast<int>(class_names.size())) {
    const std::string& name = class_names[class_index];
    if (name == "furniture") return Rgb(255, 105, 180);
    if (name == "objects" || name == "object") return Rgb(255, 140, 0);
  }
  // Bit-interleaved label colormap (as used by PASCAL VOC style tools).
  Rgb c(0, 0, 0);
  int label = class_index;
  for (int shift = 7; shift >= 0 && label > 0; --shift) {
    for (int ch = 0; ch < 3; ++ch) c[ch] = static_cast<std::uint8_t>(c[ch] | (((label >> ch) & 1) << shift));
    label >>= 3;
  }
  if (class_index == 0) c = Rgb(0, 0, 0);
  return c;
}

namespace {

constexpr const char* kPlyProperties =
    "property float x\nproperty float y\nproperty float z\n"
    "property float nx\nproperty float ny\nproperty float nz\n"
    "property uchar red\nproperty uchar green\nproperty uchar blue\n"
    "property float radius\nproperty float confidence\n"
    "property ushort class\nproperty uint instance\n";
constexpr std::size_t kPlyVertexBytes = 4 * 6 + 3 + 4 + 4 + 2 + 4;

template <typename T>
void put(std::string& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <typename T>
T take(const char*& p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  p += sizeof(T);
  return value;
}

}  // namespace

std::size_t export_ply(const SurfelMap& map, Palette palette, const fs::path& path) {
  if (map.empty()) throw Error(ErrorCode::EmptyMap, "nothing to export");
  std::string buf = "ply\nformat binary_little_endian 1.0\ncomment palette ";
  buf += palette == Palette::Rgb ? "rgb" : "class";
  buf += "\nelement vertex " + std::to_string(map.size()) + "\n" + kPlyProperties + "end_header\n";
  for (const auto& s : map.surfels()) {
    for (int i = 0; i < 3; ++i) put(buf, static_cast<float>(s.position[i]));
    for (int i = 0; i < 3; ++i) put(buf, static_cast<float>(s.normal[i]));
    const int cls = surfel_class(s).first;
    const Rgb color = palette == Palette::Rgb ? s.color : class_color(cls, map.class_names());
    for (int i = 0; i < 3; ++i) put(buf, color[i]);
    put(buf, static_cast<float>(s.radius));
    put(buf, static_cast<float>(s.confidence));
    put(buf, static_cast<std::uint16_t>(cls));
    put(buf, static_cast<std::uint32_t>(s.instance.value_or(0)));
  }
  auto out = open_out(path, true);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  finish(out, path);
  return buf.size();
}

std::vector<PlyVertex> read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  const std::string end_marker = "end_header\n";
  const auto end = data.find(end_marker);
  if (data.rfind("ply\nformat binary_little_endian 1.0\n", 0) != 0 || end == std::string::npos) {
    throw Error(ErrorCode::MalformedManifest, "not a binary little-endian PLY: " + path.string());
  }
  const std::string header = data.substr(0, end);
  const auto vpos = header.find("element vertex ");
  if (vpos == std::string::npos) throw Error(ErrorCode::MalformedManifest, "PLY without vertex element");
  const std::size_t count = std::stoul(header.substr(vpos + 15, header.find('\n', vpos) - vpos - 15));
  if (header.find(kPlyProperties) == std::string::npos) {
    throw Error(ErrorCode::MalformedManifest, "unexpected PLY vertex layout");
  }
  const std::size_t body = end + end_marker.size();
  if (data.size() - body != count * kPlyVertexBytes) throw Error(ErrorCode::MalformedManifest, "PLY size mismatch");
  std::vector<PlyVertex> out(count);
  const char* p = data.data() + body;
  for (auto& v : out) {
    for (int i = 0; i < 3; ++i) v.position[i] = take<float>(p);
    for (int i = 0; i < 3; ++i) v.normal[i] = take<float>(p);
    for (int i = 0; i < 3; ++i) v.color[i] = take<std::uint8_t>(p);
    v.radius = take<float>(p);
    v.confidence = take<float>(p);
    v.class_index = take<std::uint16_t>(p);
    v.instance = take<std::uint32_t>(p);
  }
  return out;
}

void export_gaze_events(const fs::path& path, std::span<const GazeHit> hits,
                        const std::vector<std::string>& class_names) {
  auto out = open_out(path);
  for (const auto& h : hits) {
    nlohmann::ordered_json j;
    j["ts"] = h.timestamp;
    j["source"] = std::string(to_string(h.source));
    j["px"] = {h.pixel.x(), h.pixel.y()};
    j["point"] = h.point ? nlohmann::ordered_json{h.point->x(), h.point->y(), h.point->z()} : nlohmann::ordered_json();
    j["surfel"] = h.surfel != kNoSurfel ? nlohmann::ordered_json(h.surfel) : nlohmann::ordered_json();
    if (h.class_index >= 0) {
      j["class"] = h.class_index;
      j["class_name"] = h.class_index < static_cast<int>(class_names.size())
                            ? class_names[h.class_index]
                            : "class_" + std::to_string(h.class_index);
    } else {
      j["class"] = nullptr;
      j["class_name"] = nullptr;
    }
    j["instance"] = h.instance ? nlohmann::ordered_json(*h.instance) : nlohmann::ordered_json();
    out << j.dump() << '\n';
  }
  finish(out, path);
}

std::vector<GazeHit> read_gaze_events(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<GazeHit> hits;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      GazeHit h;
      h.timestamp = j.at("ts").get<double>();
      const auto src = j.at("source").get<std::string>();
      h.source = src == "Direct" ? GazeSource::Direct : src == "WindowFallback" ? GazeSource::WindowFallback : GazeSource::Miss;
      h.pixel = {j.at("px")[0].get<double>(), j.at("px")[1].get<double>()};
      if (!j.at("point").is_null()) {
        h.point = Eigen::Vector3d(j["point"][0].get<double>(), j["point"][1].get<double>(), j["point"][2].get<double>());
      }
      if (!j.at("surfel").is_null()) h.surfel = j["surfel"].get<SurfelId>();
      if (!j.at("class").is_null()) h.class_index = j["class"].get<int>();
      if (!j.at("instance").is_null()) h.instance = j["instance"].get<InstanceId>();
      hits.push_back(std::move(h));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedManifest, std::string("bad gaze event: ") + e.what());
    }
  }
  return hits;
}

void export_instances(const fs::path& path, std::span<const ObjectInstance> instances,
                      const std::vector<std::string>& class_names) {
  auto out = open_out(path);
  out << "instance,class,class_name,size,cx,cy,cz,first_seen,last_seen\n";
  for (const auto& inst : instances) {
    const std::string name = inst.class_index < static_cast<int>(class_names.size())
                                 ? class_names[inst.class_index]
                                 : "class_" + std::to_string(inst.class_index);
    out << inst.id << ',' << inst.class_index << ',' << name << ',' << inst.members.size() << ','
        << format_fixed(inst.centroid.x()) << ',' << format_fixed(inst.centroid.y()) << ','
        << format_fixed(inst.centroid.z()) << ',' << inst.first_seen << ',' << inst.last_seen << '\n';
  }
  finish(out, path);
}

std::vector<InstanceRow> read_instances(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string line;
  if (!std::getline(in, line) || line != "instance,class,class_name,size,cx,cy,cz,first_seen,last_seen") {
    throw Error(ErrorCode::MalformedManifest, "unexpected instance table header");
  }
  std::vector<InstanceRow> rows;
  const auto code = ErrorCode::MalformedManifest;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw Error(code, "instance row needs 9 fields: " + line);
    InstanceRow r;
    r.instance = static_cast<InstanceId>(parse_int(f[0], code));
    r.class_index = static_cast<int>(parse_int(f[1], code));
    r.class_name = f[2];
    r.size = static_cast<std::size_t>(parse_int(f[3], code));
    r.centroid = {parse_double(f[4], code), parse_double(f[5], code), parse_double(f[6], code)};
    r.first_seen = static_cast<int>(parse_int(f[7], code));
    r.last_seen = static_cast<int>(parse_int(f[8], code));
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

constexpr char kSnapshotMagic[4] = {'S', 'M', 'A', 'P'};
constexpr std::uint32_t kSnapshotVersion = 1;

void put_string(std::string& buf, const std::string& s) {
  put(buf, static_cast<std::uint32_t>(s.size()));
  buf += s;
}

class Reader {
 public:
  Reader(const std::string& data, const fs::path& path) : p_(data.data()), end_(data.data() + data.size()), path_(path) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    return take<T>(p_);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(p_, n);
    p_ += n;
    return s;
  }
  bool done() const { return p_ == end_; }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) throw Error(ErrorCode::MalformedManifest, "truncated snapshot " + path_.string());
  }
  const char* p_;
  const char* end_;
  fs::path path_;
};

}  // namespace

void write_map_snapshot(const fs::path& path, const SurfelMap& map) {
  std::string buf(kSnapshotMagic, 4);
  put(buf, kSnapshotVersion);
  put(buf, static_cast<std::uint32_t>(map.num_classes()));
  put(buf, static_cast<std::uint32_t>(map.class_names().size()));
  for (const auto& n : map.class_names()) put_string(buf, n);
  const MapConfig& c = map.config();
  for (double v : {c.max_ray_distance, c.max_normal_angle_deg, c.weight_sigma, c.min_radius, c.max_radius,
                   c.stable_confidence, c.voxel_size, c.occlusion_margin, c.occlusion_ratio}) {
    put(buf, v);
  }
  put(buf, static_cast<std::int32_t>(c.probation_frames));
  put(buf, static_cast<std::int32_t>(map.frame()));
  put(buf, static_cast<std::uint32_t>(map.next_id()));
  put(buf, static_cast<std::uint64_t>(map.size()));
  for (const auto& s : map.surfels()) {
    put(buf, s.id);
    for (int i = 0; i < 3; ++i) put(buf, s.position[i]);
    for (int i = 0; i < 3; ++i) put(buf, s.normal[i]);
    put(buf, s.radius);
    for (int i = 0; i < 3; ++i) put(buf, s.color[i]);
    put(buf, s.confidence);
    for (int i = 0; i < map.num_classes(); ++i) put(buf, s.labels.log_probs()[i]);
    put(buf, static_cast<std::uint32_t>(s.instance.value_or(0)));
    put(buf, static_cast<std::int32_t>(s.created_at));
    put(buf, static_cast<std::int32_t>(s.updated_at));
  }
  auto out = open_out(path, true);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  finish(out, path);
}

SurfelMap read_map_snapshot(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  if (data.size() < 4 || std::memcmp(data.data(), kSnapshotMagic, 4) != 0) {
    throw Error(ErrorCode::MalformedManifest, "not a map snapshot: " + path.string());
  }
  const std::string payload = data.substr(4);
  Reader r(payload, path);
  if (r.get<std::uint32_t>() != kSnapshotVersion) throw Error(ErrorCode::MalformedManifest, "unsupported snapshot version");
  const int classes = static_cast<int>(r.get<std::uint32_t>());
  const auto name_count = r.get<std::uint32_t>();
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < name_count; ++i) names.push_back(r.get_string());
  MapConfig c;
  for (double* v : {&c.max_ray_distance, &c.max_normal_angle_deg, &c.weight_sigma, &c.min_radius, &c.max_radius,
                    &c.stable_confidence, &c.voxel_size, &c.occlusion_margin, &c.occlusion_ratio}) {
    *v = r.get<double>();
  }
  c.probation_frames = r.get<std::int32_t>();
  SurfelMap map(classes, c);
  if (!names.empty()) map.set_class_names(std::move(names));
  map.set_frame(r.get<std::int32_t>());
  const auto next_id = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    Surfel s;
    s.id = r.get<SurfelId>();
    for (int k = 0; k < 3; ++k) s.position[k] = r.get<double>();
    for (int k = 0; k < 3; ++k) s.normal[k] = r.get<double>();
    s.radius = r.get<double>();
    for (int k = 0; k < 3; ++k) s.color[k] = r.get<std::uint8_t>();
    s.confidence = r.get<double>();
    Eigen::VectorXd lp(classes);
    for (int k = 0; k < classes; ++k) lp[k] = r.get<double>();
    s.labels = ClassDistribution(std::move(lp));
    const auto inst = r.get<std::uint32_t>();
    if (inst != 0) s.instance = inst;
    s.created_at = r.get<std::int32_t>();
    s.updated_at = r.get<std::int32_t>();
    map.restore(std::move(s), next_id);
  }
  if (!r.done()) throw Error(ErrorCode::MalformedManifest, "trailing bytes in snapshot " + path.string());
  return map;
}

}  // namespace gazefusion
