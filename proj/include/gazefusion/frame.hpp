#pragma once

#include "gazefusion/image.hpp"
#include "gazefusion/labels.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace gazefusion {

/// One gaze sample in eye-tracker scene-camera pixels.
struct GazeSample {
  double timestamp = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  bool valid = false;
};

struct Frame {
  double timestamp = 0;
  RgbImage rgb;
  DepthImage depth;
  std::optional<ProbabilityFrame> probabilities;
  std::vector<GazeSample> gaze;
};

}  // namespace gazefusion
