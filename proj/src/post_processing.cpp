#include "mfstereo/post_processing.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace mfstereo {

ValidityMask lrc_check(const DisparityMap& left, const DisparityMap& right,
                       float tolerance) {
  if (!left.same_size(right)) {
    throw InputError("left and right disparity maps differ in size");
  }
  const int w = left.width();
  ValidityMask mask(w, left.height(), 0);
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const float dl = left.at(x, y);
      if (!is_valid_disparity(dl)) continue;
      const long xr = x - std::lround(dl);
      if (xr < 0 || xr >= w) continue;
      const float dr = right.at(static_cast<int>(xr), y);
      if (is_valid_disparity(dr) && std::abs(dl - dr) <= tolerance) {
        mask.at(x, y) = 1;
      }
    }
  }
  return mask;
}

DisparityMap occlusion_fill(const DisparityMap& disparity, const ValidityMask& mask) {
  if (!disparity.same_size(mask)) {
    throw InputError("disparity map and mask differ in size");
  }
  const int w = disparity.width();
  const int h = disparity.height();
  DisparityMap out = disparity;
  std::vector<bool> row_filled(h, false);
  std::vector<float> left_value(w);

  for (int y = 0; y < h; ++y) {
    auto valid = [&](int x) {
      return mask.at(x, y) != 0 && is_valid_disparity(disparity.at(x, y));
    };
    float last = kInvalidDisparity;
    bool any = false;
    for (int x = 0; x < w; ++x) {
      if (valid(x)) {
        last = disparity.at(x, y);
        any = true;
      }
      left_value[x] = last;
    }
    if (!any) continue;
    row_filled[y] = true;
    float next = kInvalidDisparity;
    for (int x = w - 1; x >= 0; --x) {
      if (valid(x)) {
        next = disparity.at(x, y);
        continue;
      }
      // The invalid marker compares greater than every finite disparity.
      out.at(x, y) = std::min(left_value[x], next);
    }
  }

  if (std::none_of(row_filled.begin(), row_filled.end(), [](bool b) { return b; })) {
    throw InputError("occlusion fill needs at least one valid pixel");
  }
  // Rows without any valid pixel take the nearest filled row.
  for (int y = 0; y < h; ++y) {
    if (row_filled[y]) continue;
    int above = y - 1;
    while (above >= 0 && !row_filled[above]) --above;
    int below = y + 1;
    while (below < h && !row_filled[below]) ++below;
    for (int x = 0; x < w; ++x) {
      float v = kInvalidDisparity;
      const int da = above >= 0 ? y - above : h + 1;
      const int db = below < h ? below - y : h + 1;
      if (da <= db) v = std::min(v, out.at(x, above));
      if (db <= da) v = std::min(v, out.at(x, below));
      out.at(x, y) = v;
    }
  }
  return out;
}

DisparityMap weighted_median(const DisparityMap& disparity, const RgbImage& guide,
                             const ValidityMask& mask, int window,
                             const FeatureSpec& spec) {
  if (window < 1 || window % 2 == 0) {
    throw InputError("weighted median window must be odd, got " + std::to_string(window));
  }
  spec.validate();
  if (!disparity.same_size(guide) || !disparity.same_size(mask)) {
    throw InputError("weighted median inputs differ in size");
  }
  const int r = window / 2;
  const int w = disparity.width();
  const int h = disparity.height();
  const double inv_sx = 1.0 / (2.0 * spec.sigma_x * spec.sigma_x);
  const double inv_sf = 1.0 / (2.0 * spec.sigma_f * spec.sigma_f);

  DisparityMap out = disparity;
  std::vector<std::pair<float, double>> samples;
  samples.reserve(static_cast<std::size_t>(window) * window);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) != 0) continue;
      samples.clear();
      double total = 0.0;
      for (int sy = std::max(0, y - r); sy <= std::min(h - 1, y + r); ++sy) {
        for (int sx = std::max(0, x - r); sx <= std::min(w - 1, x + r); ++sx) {
          const float v = disparity.at(sx, sy);
          if (!is_valid_disparity(v)) continue;
          double color2 = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double diff = static_cast<double>(guide.at(sx, sy, c)) - guide.at(x, y, c);
            color2 += diff * diff;
          }
          const double space2 = static_cast<double>((sx - x) * (sx - x) + (sy - y) * (sy - y));
          const double weight = std::exp(-space2 * inv_sx - color2 * inv_sf);
          samples.emplace_back(v, weight);
          total += weight;
        }
      }
      if (samples.empty()) continue;
      std::sort(samples.begin(), samples.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double cumulative = 0.0;
      for (const auto& [value, weight] : samples) {
        cumulative += weight;
        if (cumulative >= 0.5 * total) {
          out.at(x, y) = value;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace mfstereo
