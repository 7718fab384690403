#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace helipad {

/// Raised when an operation receives input outside its contract.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GrayTag {};
struct MaskTag {};
struct FloatTag {};

/// Row-major raster of `T`. The tag keeps 8-bit gray images and 0/1 masks
/// apart at the type level even though both store bytes.
template <typename T, typename Tag = void>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw InvalidArgument("raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  T& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Clamp-to-edge access.
  const T& at_clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return (*this)(x, y);
  }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Raster<std::uint8_t, GrayTag>;
/// Foreground = 1, background = 0.
using BinaryImage = Raster<std::uint8_t, MaskTag>;
using FloatImage = Raster<float, FloatTag>;

/// Interleaved 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* px(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

/// Sub-pixel image position. Pixel centres sit on integer coordinates.
struct PointPx {
  double u = 0.0;
  double v = 0.0;

  friend PointPx operator+(PointPx a, PointPx b) { return {a.u + b.u, a.v + b.v}; }
  friend PointPx operator-(PointPx a, PointPx b) { return {a.u - b.u, a.v - b.v}; }
  friend PointPx operator*(double s, PointPx a) { return {s * a.u, s * a.v}; }
  friend bool operator==(PointPx a, PointPx b) = default;
};

double distance(PointPx a, PointPx b);

/// Axis-aligned box in continuous pixel coordinates: covers [u0, u0 + w) x [v0, v0 + h)
/// where pixel k spans [k - 0.5, k + 0.5).
struct BBox {
  double u0 = 0.0;
  double v0 = 0.0;
  double w = 0.0;
  double h = 0.0;

  PointPx center() const { return {u0 + 0.5 * w, v0 + 0.5 * h}; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }
  /// True when the box overlaps the image rectangle.
  bool intersects(int width, int height) const {
    return u0 + w > -0.5 && v0 + h > -0.5 && u0 < width - 0.5 && v0 < height - 0.5;
  }
  static BBox square_around(PointPx c, double half) { return {c.u - half, c.v - half, 2 * half, 2 * half}; }
};

double iou(const BBox& a, const BBox& b);

}  // namespace helipad
