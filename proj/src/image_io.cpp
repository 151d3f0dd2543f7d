#include "gazefusion/error.hpp"
#include "gazefusion/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>

namespace gazefusion {

GrayImage to_gray(const RgbImage& rgb) {
  GrayImage gray(rgb.width(), rgb.height());
  for (std::size_t i = 0; i < rgb.size(); ++i) gray[i] = to_gray(rgb[i]);
  return gray;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

DecodedPng decode(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::MissingFile, path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::MalformedManifest, "libpng init failed for " + path);
  }
  DecodedPng out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::MalformedManifest, "corrupt PNG " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);  // host little-endian 16-bit
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.bytes.resize(row_bytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int r = 0; r < out.height; ++r) rows[r] = out.bytes.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::string& path, int width, int height, int color_type, int bit_depth,
            const std::vector<std::uint8_t>& bytes, std::size_t row_bytes) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::WriteFailure, path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::WriteFailure, "libpng init failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::WriteFailure, path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r) rows[r] = const_cast<std::uint8_t*>(bytes.data()) + r * row_bytes;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

DepthImage read_depth_png(const std::string& path) {
  const DecodedPng png = decode(path);
  if (png.channels != 1 || png.bit_depth != 16) {
    throw Error(ErrorCode::MalformedManifest, "depth PNG must be 16-bit single channel: " + path);
  }
  DepthImage depth(png.width, png.height);
  std::memcpy(depth.data().data(), png.bytes.data(), depth.size() * sizeof(std::uint16_t));
  return depth;
}

RgbImage read_rgb_png(const std::string& path) {
  const DecodedPng png = decode(path);
  if (png.channels != 3 || png.bit_depth != 8) {
    throw Error(ErrorCode::MalformedManifest, "color PNG must be 8-bit RGB: " + path);
  }
  RgbImage rgb(png.width, png.height);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    rgb[i] = Rgb(png.bytes[3 * i], png.bytes[3 * i + 1], png.bytes[3 * i + 2]);
  }
  return rgb;
}

void write_depth_png(const std::string& path, const DepthImage& depth) {
  std::vector<std::uint8_t> bytes(depth.size() * 2);
  std::memcpy(bytes.data(), depth.data().data(), bytes.size());
  encode(path, depth.width(), depth.height(), PNG_COLOR_TYPE_GRAY, 16, bytes,
         static_cast<std::size_t>(depth.width()) * 2);
}

void write_rgb_png(const std::string& path, const RgbImage& rgb) {
  std::vector<std::uint8_t> bytes(rgb.size() * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    for (int c = 0; c < 3; ++c) bytes[3 * i + c] = rgb[i][c];
  }
  encode(path, rgb.width(), rgb.height(), PNG_COLOR_TYPE_RGB, 8, bytes, static_cast<std::size_t>(rgb.width()) * 3);
}

}  // namespace gazefusion
