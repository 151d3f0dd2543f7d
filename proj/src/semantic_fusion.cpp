#include "gazefusion/semantic_fusion.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gazefusion {

ClassDistribution ClassDistribution::uniform(int num_classes) {
  if (num_classes < 1) throw Error(ErrorCode::InvalidArgument, "class count must be at least 1");
  return ClassDistribution(Eigen::VectorXd::Constant(num_classes, -std::log(static_cast<double>(num_classes))));
}

ClassDistribution ClassDistribution::from_probabilities(const Eigen::VectorXd& probs) {
  const double total = probs.sum();
  if (!(total > 0) || (probs.array() < 0).any()) {
    throw Error(ErrorCode::InvalidArgument, "probabilities must be nonnegative with positive sum");
  }
  return ClassDistribution((probs / total).array().log().matrix());
}

std::pair<int, double> ClassDistribution::argmax() const {
  int best = 0;
  for (int c = 1; c < num_classes(); ++c) {
    if (log_probs_[c] > log_probs_[best]) best = c;
  }
  return {best, std::exp(log_probs_[best])};
}

void ClassDistribution::normalize() {
  const double peak = log_probs_.maxCoeff();
  const double log_sum = peak + std::log((log_probs_.array() - peak).exp().sum());
  log_probs_.array() -= log_sum;
}

ProbabilityFrame::ProbabilityFrame(int width, int height, int num_classes)
    : width_(width), height_(height), num_classes_(num_classes),
      values_(static_cast<std::size_t>(width) * height * num_classes, 0.0f) {
  if (width < 0 || height < 0 || num_classes < 0) throw Error(ErrorCode::InvalidArgument, "negative probability frame size");
}

void ProbabilityFrame::validate() const {
  if (num_classes_ < 2) throw Error(ErrorCode::DimensionMismatch, "probability frame needs at least 2 classes");
  for (int v = 0; v < height_; ++v) {
    for (int u = 0; u < width_; ++u) {
      const float* p = pixel(u, v);
      double sum = 0;
      for (int c = 0; c < num_classes_; ++c) {
        if (!(p[c] >= 0)) throw Error(ErrorCode::InvalidArgument, "negative or NaN class probability");
        sum += p[c];
      }
      if (std::abs(sum - 1.0) > 1e-4) throw Error(ErrorCode::InvalidArgument, "pixel probabilities do not sum to 1");
    }
  }
}

namespace {

constexpr char kMagic[4] = {'P', 'F', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::MalformedManifest, "truncated header in " + path);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

ProbabilityFrame read_probability_frame(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::MalformedManifest, "bad probability-map magic in " + path);
  }
  if (get_u32(in, path) != kVersion) throw Error(ErrorCode::MalformedManifest, "unsupported probability-map version");
  const std::uint32_t width = get_u32(in, path);
  const std::uint32_t height = get_u32(in, path);
  const std::uint32_t classes = get_u32(in, path);
  if (width == 0 || height == 0 || classes < 2 || width > 1u << 15 || height > 1u << 15 || classes > 1u << 16) {
    throw Error(ErrorCode::MalformedManifest, "implausible probability-map header in " + path);
  }
  ProbabilityFrame frame(static_cast<int>(width), static_cast<int>(height), static_cast<int>(classes));
  auto& values = frame.values();
  std::vector<unsigned char> bytes(values.size() * 4);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
    throw Error(ErrorCode::MalformedManifest, "truncated probability data in " + path);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::MalformedManifest, "trailing bytes in " + path);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) | static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
    std::memcpy(&values[i], &bits, 4);
  }
  return frame;
}

void write_probability_frame(const std::string& path, const ProbabilityFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::WriteFailure, path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(frame.width()));
  put_u32(out, static_cast<std::uint32_t>(frame.height()));
  put_u32(out, static_cast<std::uint32_t>(frame.num_classes()));
  for (float f : frame.values()) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  if (!out) throw Error(ErrorCode::WriteFailure, path);
}

std::vector<std::string> read_class_names(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    names.push_back(line);
  }
  return names;
}

void write_class_names(const std::string& path, const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::WriteFailure, path);
  for (const auto& n : names) out << n << '\n';
  if (!out) throw Error(ErrorCode::WriteFailure, path);
}

namespace {

template <typename T>
ClassDistribution update_impl(const ClassDistribution& prior, std::span<const T> observation) {
  const auto k = static_cast<std::size_t>(prior.num_classes());
  if (observation.size() != k) throw Error(ErrorCode::DimensionMismatch, "observation length differs from class count");
  double total = 0;
  for (T o : observation) total += std::max(static_cast<double>(o), kObservationFloor);
  const double log_total = std::log(total);
  Eigen::VectorXd posterior = prior.log_probs();
  for (std::size_t c = 0; c < k; ++c) {
    posterior[c] += std::log(std::max(static_cast<double>(observation[c]), kObservationFloor)) - log_total;
  }
  ClassDistribution out(std::move(posterior));
  out.normalize();
  return out;
}

}  // namespace

ClassDistribution bayes_update(const ClassDistribution& prior, std::span<const double> observation) {
  return update_impl(prior, observation);
}

ClassDistribution bayes_update(const ClassDistribution& prior, std::span<const float> observation) {
  return update_impl(prior, observation);
}

std::size_t fuse_frame(SurfelMap& map, const IndexMap& index_map, const ProbabilityFrame& probs) {
  if (probs.width() != index_map.width() || probs.height() != index_map.height()) {
    throw Error(ErrorCode::DimensionMismatch, "probability frame and index map sizes differ");
  }
  if (probs.num_classes() != map.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "probability frame class count differs from the map");
  }
  const auto k = static_cast<std::size_t>(probs.num_classes());
  std::size_t updates = 0;
  for (int v = 0; v < index_map.height(); ++v) {
    for (int u = 0; u < index_map.width(); ++u) {
      const SurfelId id = index_map.associated(u, v);
      if (id == kNoSurfel) continue;
      Surfel* s = map.find(id);
      if (!s) continue;
      s->labels = bayes_update(s->labels, std::span<const float>(probs.pixel(u, v), k));
      ++updates;
    }
  }
  return updates;
}

std::pair<int, double> surfel_class(const Surfel& s) { return s.labels.argmax(); }

}  // namespace gazefusion
