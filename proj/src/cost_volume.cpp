#include "mfstereo/cost_volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace mfstereo {

CensusField::CensusField(int width, int height, int window)
    : width_(width),
      height_(height),
      window_(window),
      words_((window * window - 1 + 63) / 64),
      codes_(static_cast<std::size_t>(width) * height * words_, 0) {}

int hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  int distance = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    distance += std::popcount(a[i] ^ b[i]);
  }
  return distance;
}

CensusField census(const GrayImage& image, int window) {
  if (window < 3 || window % 2 == 0) {
    throw InputError("census window must be odd and at least 3, got " +
                     std::to_string(window));
  }
  if (window > std::min(image.width(), image.height())) {
    throw InputError("census window " + std::to_string(window) +
                     " exceeds the image size");
  }
  const int r = window / 2;
  const int w = image.width();
  const int h = image.height();
  CensusField field(w, h, window);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float center = image.at(x, y);
      auto code = field.code(x, y);
      int k = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int sy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -r; dx <= r; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int sx = std::clamp(x + dx, 0, w - 1);
          if (image.at(sx, sy) < center) {
            code[k / 64] |= std::uint64_t{1} << (k % 64);
          }
          ++k;
        }
      }
    }
  }
  return field;
}

GrayImage gradient_x(const GrayImage& image) {
  const int w = image.width();
  GrayImage grad(w, image.height(), 0.0f);
  if (w < 2) return grad;
  for (int y = 0; y < image.height(); ++y) {
    const float* src = image.row(y);
    float* dst = grad.row(y);
    dst[0] = src[1] - src[0];
    dst[w - 1] = src[w - 1] - src[w - 2];
    for (int x = 1; x < w - 1; ++x) {
      dst[x] = 0.5f * (src[x + 1] - src[x - 1]);
    }
  }
  return grad;
}

float CostParams::max_in_view_cost() const {
  return w_census * static_cast<float>(census_window * census_window - 1) +
         w_grad * tau_grad;
}

float CostParams::out_of_view_cost() const {
  return cost_out_of_view.value_or(0.9f * max_in_view_cost());
}

void CostParams::validate() const {
  if (census_window < 3 || census_window % 2 == 0) {
    throw InputError("census_window must be odd and at least 3");
  }
  if (!(w_census >= 0.0f) || !(w_grad >= 0.0f)) {
    throw InputError("cost weights must be non-negative");
  }
  if (!(tau_grad > 0.0f)) {
    throw InputError("tau_grad must be positive");
  }
  if (cost_out_of_view && !(*cost_out_of_view >= 0.0f && std::isfinite(*cost_out_of_view))) {
    throw InputError("cost_out_of_view must be finite and non-negative");
  }
}

CostVolume::CostVolume(int width, int height, int levels)
    : width_(width), height_(height), levels_(levels) {
  if (width < 1 || height < 1) {
    throw InputError("cost volume dimensions must be positive");
  }
  if (levels < 2 || levels > kMaxLevels) {
    throw InputError("disparity levels must be in [2, " +
                     std::to_string(kMaxLevels) + "], got " + std::to_string(levels));
  }
  cost_.assign(pixel_count() * levels, 0.0f);
}

GrayImage CostVolume::slice(int level) const {
  GrayImage out(width_, height_);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    out.data()[i] = cost_[i * levels_ + level];
  }
  return out;
}

CostVolume build_cost_volume(const GrayImage& left, const GrayImage& right,
                             int levels, const CostParams& params,
                             Reference reference) {
  params.validate();
  if (!left.same_size(right)) {
    throw InputError("left and right images differ in size");
  }
  const GrayImage& base = reference == Reference::kLeft ? left : right;
  const GrayImage& other = reference == Reference::kLeft ? right : left;
  const int step = reference == Reference::kLeft ? -1 : 1;

  const int w = base.width();
  const int h = base.height();
  CostVolume cv(w, h, levels);
  const CensusField census_base = census(base, params.census_window);
  const CensusField census_other = census(other, params.census_window);
  const GrayImage grad_base = gradient_x(base);
  const GrayImage grad_other = gradient_x(other);
  const float outside = params.out_of_view_cost();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto code = census_base.code(x, y);
      const float g = grad_base.at(x, y);
      for (int d = 0; d < levels; ++d) {
        const int xo = x + step * d;
        if (xo < 0 || xo >= w) {
          cv.at(x, y, d) = outside;
          continue;
        }
        const float census_cost =
            params.w_census * static_cast<float>(hamming(code, census_other.code(xo, y)));
        const float grad_cost =
            params.w_grad * std::min(std::abs(g - grad_other.at(xo, y)), params.tau_grad);
        cv.at(x, y, d) = census_cost + grad_cost;
      }
    }
  }
  return cv;
}

CostVolume mirror(const CostVolume& cv) {
  CostVolume out(cv.width(), cv.height(), cv.levels());
  for (int y = 0; y < cv.height(); ++y) {
    for (int x = 0; x < cv.width(); ++x) {
      for (int d = 0; d < cv.levels(); ++d) {
        out.at(cv.width() - 1 - x, y, d) = cv.at(x, y, d);
      }
    }
  }
  return out;
}

}  // namespace mfstereo
