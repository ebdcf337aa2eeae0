#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>

#include "mfstereo/image_io.hpp"

namespace mfstereo::testing {

namespace {

struct Layer {
  int disparity;
  std::function<bool(int, int)> contains;  // in left-view coordinates
  std::uint8_t base[3];
  std::uint32_t salt;
};

std::uint32_t mix(std::uint32_t h) {
  h ^= h >> 16;
  h *= 0x7feb352du;
  h ^= h >> 15;
  h *= 0x846ca68bu;
  h ^= h >> 16;
  return h;
}

/// Texture of a layer at surface coordinate (u, y); u may leave the image.
std::uint8_t texel(const Layer& layer, int u, int y, int c, int noise) {
  const std::uint32_t h = mix(layer.salt ^ mix(static_cast<std::uint32_t>(u + 4096) * 73856093u ^
                                               static_cast<std::uint32_t>(y) * 19349663u ^
                                               static_cast<std::uint32_t>(c) * 83492791u));
  const int offset = static_cast<int>(h % static_cast<std::uint32_t>(2 * noise + 1)) - noise;
  return static_cast<std::uint8_t>(std::clamp(layer.base[c] + offset, 0, 255));
}

std::vector<Layer> build_layers(const SceneSpec& spec, std::mt19937& rng) {
  std::vector<int> levels = spec.levels;
  std::sort(levels.begin(), levels.end(), std::greater<>());
  std::uniform_int_distribution<int> color(40, 215);
  std::vector<Layer> layers;
  const int w = spec.width;
  const int h = spec.height;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    Layer layer{levels[k], {}, {}, static_cast<std::uint32_t>(rng())};
    for (auto& b : layer.base) b = static_cast<std::uint8_t>(color(rng));
    const bool background = k + 1 == levels.size();
    if (background) {
      layer.contains = [](int, int) { return true; };
    } else if (spec.thin_bars && k == 0) {
      std::uniform_int_distribution<int> width(2, 3);
      std::vector<std::pair<int, int>> bars;
      for (int x = w / 8; x + 3 < w - w / 8; x += w / 6) bars.emplace_back(x, x + width(rng));
      const int top = h / 8;
      const int bottom = h - h / 8;
      layer.contains = [bars, top, bottom](int x, int y) {
        if (y < top || y >= bottom) return false;
        for (auto [a, b] : bars) {
          if (x >= a && x < b) return true;
        }
        return false;
      };
    } else if (k % 2 == 0) {
      std::uniform_int_distribution<int> cx(w / 3, 2 * w / 3);
      std::uniform_int_distribution<int> cy(h / 3, 2 * h / 3);
      std::uniform_int_distribution<int> radius(std::min(w, h) / 8, std::min(w, h) / 5);
      const int x0 = cx(rng), y0 = cy(rng), r = radius(rng);
      layer.contains = [x0, y0, r](int x, int y) {
        return (x - x0) * (x - x0) + (y - y0) * (y - y0) <= r * r;
      };
    } else {
      std::uniform_int_distribution<int> x0d(w / 10, w / 3);
      std::uniform_int_distribution<int> y0d(h / 10, h / 3);
      std::uniform_int_distribution<int> extent(w / 3, w / 2);
      const int x0 = x0d(rng), y0 = y0d(rng);
      const int x1 = std::min(w - 4, x0 + extent(rng));
      const int y1 = std::min(h - 4, y0 + extent(rng));
      layer.contains = [x0, y0, x1, y1](int x, int y) {
        return x >= x0 && x < x1 && y >= y0 && y < y1;
      };
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

/// Nearest layer covering left-view (x, y); layers are ordered near to far.
const Layer& top_layer(const std::vector<Layer>& layers, int x, int y) {
  for (const auto& l : layers) {
    if (l.contains(x, y)) return l;
  }
  return layers.back();
}

/// Nearest layer seen at right-view (xr, y).
const Layer& visible_in_right(const std::vector<Layer>& layers, int xr, int y) {
  for (const auto& l : layers) {
    if (l.contains(xr + l.disparity, y)) return l;
  }
  return layers.back();
}

}  // namespace

SyntheticScene make_scene(const SceneSpec& spec) {
  std::mt19937 rng(spec.seed);
  const auto layers = build_layers(spec, rng);
  const int w = spec.width;
  const int h = spec.height;
  SyntheticScene s{RgbImage(w, h), RgbImage(w, h), DisparityMap(w, h),
                   ValidityMask(w, h, 0), ValidityMask(w, h, 0), spec.ndisp};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Layer& l = top_layer(layers, x, y);
      for (int c = 0; c < 3; ++c) s.left.at(x, y, c) = texel(l, x, y, c, spec.noise);
      s.gt.at(x, y) = static_cast<float>(l.disparity);
      const int xr = x - l.disparity;
      s.nocc.at(x, y) = xr >= 0 && &visible_in_right(layers, xr, y) == &l;
      s.thin.at(x, y) = spec.thin_bars && &l == &layers.front();

      const Layer& r = visible_in_right(layers, x, y);
      for (int c = 0; c < 3; ++c) s.right.at(x, y, c) = texel(r, x + r.disparity, y, c, spec.noise);
    }
  }
  return s;
}

SyntheticScene make_shifted_pair(int width, int height, int shift, int ndisp,
                                 std::uint32_t seed, int noise) {
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.ndisp = ndisp;
  spec.levels = {shift};
  spec.noise = noise;
  spec.seed = seed;
  return make_scene(spec);
}

std::vector<SceneSpec> scene_suite() {
  std::vector<SceneSpec> suite;
  for (std::uint32_t i = 0; i < 10; ++i) {
    SceneSpec spec;
    spec.seed = 1000 + i;
    spec.thin_bars = i >= 6;
    suite.push_back(spec);
  }
  return suite;
}

void write_dataset(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_png(scene.left, dir / "im0.png");
  write_png(scene.right, dir / "im1.png");
  write_pfm(scene.gt, dir / "disp0GT.pfm");
  Grid<std::uint8_t, 1> mask(scene.nocc.width(), scene.nocc.height());
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    mask.data()[i] = scene.nocc.data()[i] ? 255 : 128;
  }
  write_png(mask, dir / "mask0nocc.png");
  std::ofstream calib(dir / "calib.txt");
  calib << "width=" << scene.left.width() << "\nheight=" << scene.left.height()
        << "\nndisp=" << scene.ndisp << "\n";
}

double fraction_within(const DisparityMap& pred, const SyntheticScene& scene, float tolerance) {
  std::size_t total = 0;
  std::size_t good = 0;
  for (std::size_t i = 0; i < pred.pixel_count(); ++i) {
    if (!scene.nocc.data()[i]) continue;
    ++total;
    const float p = pred.data()[i];
    good += is_valid_disparity(p) && std::abs(p - scene.gt.data()[i]) <= tolerance;
  }
  return total == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(total);
}

}  // namespace mfstereo::testing
