#pragma once

#include "gazefusion/error.hpp"

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace gazefusion {

/// Per-surfel class evidence, stored as normalized log probabilities.
class ClassDistribution {
 public:
  ClassDistribution() = default;
  explicit ClassDistribution(Eigen::VectorXd log_probs) : log_probs_(std::move(log_probs)) {}

  static ClassDistribution uniform(int num_classes);
  /// Normalizes the given (nonnegative, not all zero) probabilities.
  static ClassDistribution from_probabilities(const Eigen::VectorXd& probs);

  int num_classes() const { return static_cast<int>(log_probs_.size()); }
  const Eigen::VectorXd& log_probs() const { return log_probs_; }
  Eigen::VectorXd& log_probs() { return log_probs_; }
  Eigen::VectorXd probabilities() const { return log_probs_.array().exp(); }

  /// Argmax and its probability; ties go to the smaller class index.
  std::pair<int, double> argmax() const;

  /// Shifts log_probs so that the exponentials sum to one.
  void normalize();

  bool operator==(const ClassDistribution&) const = default;

 private:
  Eigen::VectorXd log_probs_;
};

/// Per-pixel class probabilities for one frame, pixel-major with the K
/// classes innermost.
class ProbabilityFrame {
 public:
  ProbabilityFrame() = default;
  ProbabilityFrame(int width, int height, int num_classes);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_classes() const { return num_classes_; }

  const float* pixel(int u, int v) const {
    return values_.data() + (static_cast<std::size_t>(v) * width_ + u) * num_classes_;
  }
  float* pixel(int u, int v) { return values_.data() + (static_cast<std::size_t>(v) * width_ + u) * num_classes_; }

  std::vector<float>& values() { return values_; }
  const std::vector<float>& values() const { return values_; }

  /// Throws DimensionMismatch / InvalidArgument when K < 2 or a pixel is not
  /// a probability vector within 1e-4.
  void validate() const;

 private:
  int width_ = 0;
  int height_ = 0;
  int num_classes_ = 0;
  std::vector<float> values_;
};

/// Reads / writes the "PFRM" little-endian probability-map container.
ProbabilityFrame read_probability_frame(const std::string& path);
void write_probability_frame(const std::string& path, const ProbabilityFrame& frame);

/// One class name per line, line number = class index.
std::vector<std::string> read_class_names(const std::string& path);
void write_class_names(const std::string& path, const std::vector<std::string>& names);

}  // namespace gazefusion
