#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace gazefusion {

using Rgb = Eigen::Matrix<std::uint8_t, 3, 1>;

/// Row-major image addressed as (u, v) = (column, row).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  T& operator()(int u, int v) { return data_[static_cast<std::size_t>(v) * width_ + u]; }
  const T& operator()(int u, int v) const { return data_[static_cast<std::size_t>(v) * width_ + u]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  void fill(const T& value) { std::fill(data_.begin(), data_.end(), value); }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using DepthImage = Image<std::uint16_t>;
using RgbImage = Image<Rgb>;
using GrayImage = Image<float>;

inline float to_gray(const Rgb& c) {
  return (0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2]) / 255.0f;
}

GrayImage to_gray(const RgbImage& rgb);

// 16-bit single channel and 8-bit RGB PNG round trips.
DepthImage read_depth_png(const std::string& path);
RgbImage read_rgb_png(const std::string& path);
void write_depth_png(const std::string& path, const DepthImage& depth);
void write_rgb_png(const std::string& path, const RgbImage& rgb);

}  // namespace gazefusion
