#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "mfstereo/errors.hpp"

namespace mfstereo {

/// Row-major planar grid of T with `channels` interleaved values per pixel.
template <typename T, int Channels>
class Grid {
 public:
  static constexpr int kChannels = Channels;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw InputError("image dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
  }
  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
      throw InputError("image dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height * Channels) {
      throw InputError("image payload does not match its dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const { return data_.empty(); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  T& at(int x, int y, int c = 0) { return data_[index(x, y) * Channels + c]; }
  const T& at(int x, int y, int c = 0) const {
    return data_[index(x, y) * Channels + c];
  }

  T* row(int y) { return data_.data() + index(0, y) * Channels; }
  const T* row(int y) const { return data_.data() + index(0, y) * Channels; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_size(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U, int C>
  bool same_size(const Grid<U, C>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid& a, const Grid& b) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using RgbImage = Grid<std::uint8_t, 3>;
using GrayImage = Grid<float, 1>;

/// Per-pixel disparity; invalid pixels hold +infinity (Middlebury convention).
using DisparityMap = Grid<float, 1>;

/// One byte per pixel, nonzero = valid.
using ValidityMask = Grid<std::uint8_t, 1>;

inline constexpr float kInvalidDisparity = std::numeric_limits<float>::infinity();

inline bool is_valid_disparity(float d) { return d != kInvalidDisparity; }

/// Horizontal flip. Used to turn right-reference matching into left-reference
/// matching on mirrored inputs.
template <typename T, int C>
Grid<T, C> mirror(const Grid<T, C>& img) {
  Grid<T, C> out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < C; ++c) {
        out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
      }
    }
  }
  return out;
}

}  // namespace mfstereo
