#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfstereo/image.hpp"

namespace mfstereo {

/// Census codes for every pixel. Bit k of a code is set iff the k-th
/// neighbor of the window (row-major, center skipped) is strictly darker than
/// the center. Windows are edge-clamped at the border.
class CensusField {
 public:
  CensusField(int width, int height, int window);

  int width() const { return width_; }
  int height() const { return height_; }
  int window() const { return window_; }
  int bits() const { return window_ * window_ - 1; }
  int words() const { return words_; }

  std::span<const std::uint64_t> code(int x, int y) const {
    return {codes_.data() + (static_cast<std::size_t>(y) * width_ + x) * words_,
            static_cast<std::size_t>(words_)};
  }
  std::span<std::uint64_t> code(int x, int y) {
    return {codes_.data() + (static_cast<std::size_t>(y) * width_ + x) * words_,
            static_cast<std::size_t>(words_)};
  }

  bool bit(int x, int y, int k) const {
    return (code(x, y)[k / 64] >> (k % 64)) & 1u;
  }

 private:
  int width_;
  int height_;
  int window_;
  int words_;
  std::vector<std::uint64_t> codes_;
};

int hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Throws InputError for an even window, a window below 3, or one larger than
/// the image.
CensusField census(const GrayImage& image, int window);

/// Central differences (I(x+1) - I(x-1)) / 2, one-sided at the left and right
/// borders. A one-pixel-wide image gives a zero field.
GrayImage gradient_x(const GrayImage& image);

struct CostParams {
  int census_window = 5;
  float w_census = 1.0f;
  float w_grad = 0.4f;
  float tau_grad = 16.0f;
  /// Cost of a match that falls outside the other image. Defaults to 0.9 of
  /// the largest possible in-view cost.
  std::optional<float> cost_out_of_view;

  float max_in_view_cost() const;
  float out_of_view_cost() const;
  void validate() const;
};

enum class Reference { kLeft, kRight };

/// Unary cost for every pixel and disparity level, pixel-major with the
/// levels of one pixel contiguous.
class CostVolume {
 public:
  static constexpr int kMaxLevels = 1024;

  CostVolume(int width, int height, int levels);

  int width() const { return width_; }
  int height() const { return height_; }
  int levels() const { return levels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  float& at(int x, int y, int d) {
    return cost_[(static_cast<std::size_t>(y) * width_ + x) * levels_ + d];
  }
  float at(int x, int y, int d) const {
    return cost_[(static_cast<std::size_t>(y) * width_ + x) * levels_ + d];
  }
  std::span<const float> pixel(std::size_t i) const {
    return {cost_.data() + i * levels_, static_cast<std::size_t>(levels_)};
  }
  std::span<float> pixel(std::size_t i) {
    return {cost_.data() + i * levels_, static_cast<std::size_t>(levels_)};
  }

  const std::vector<float>& data() const { return cost_; }
  std::vector<float>& data() { return cost_; }

  /// Cost slice of one disparity level as an image.
  GrayImage slice(int level) const;

 private:
  int width_;
  int height_;
  int levels_;
  std::vector<float> cost_;
};

/// For the left reference, the cost of pixel (x, y) at disparity d compares
/// left (x, y) with right (x - d, y):
///   w_census * hamming + w_grad * min(|gx_left - gx_right|, tau_grad).
/// The right reference compares right (x, y) with left (x + d, y). Matches
/// outside the other image cost `params.out_of_view_cost()`.
CostVolume build_cost_volume(const GrayImage& left, const GrayImage& right,
                             int levels, const CostParams& params,
                             Reference reference = Reference::kLeft);

/// Mirrors a cost volume horizontally (levels are untouched).
CostVolume mirror(const CostVolume& cv);

}  // namespace mfstereo
