#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace semloc {

inline constexpr std::uint16_t kIgnoreLabel = 255;

/// Row-major image; pixel (0,0) is top-left, x grows right, y grows down.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <typename U>
  bool same_shape(const Raster<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  bool operator==(const Raster& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using LabelMap = Raster<std::uint16_t>;
using DepthMap = Raster<double>;
using BinaryMask = Raster<std::uint8_t>;

inline LabelMap make_label_map(int width, int height) {
  return LabelMap(width, height, kIgnoreLabel);
}

inline DepthMap make_depth_map(int width, int height) {
  return DepthMap(width, height, std::numeric_limits<double>::infinity());
}

}  // namespace semloc
