#include "mfstereo/gaussian_lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <map>
#include <numeric>
#include <optional>

namespace mfstereo {

void FeatureSpec::validate() const {
  if (!(sigma_x > 0.0f) || !(sigma_f > 0.0f) || !std::isfinite(sigma_x) ||
      !std::isfinite(sigma_f)) {
    throw InputError("feature bandwidths must be positive and finite");
  }
}

FeatureMatrix bilateral_features(const RgbImage& image, const FeatureSpec& spec) {
  spec.validate();
  FeatureMatrix features(image.pixel_count(), 5);
  const float inv_x = 1.0f / spec.sigma_x;
  const float inv_f = 1.0f / spec.sigma_f;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      auto p = features.point(image.index(x, y));
      p[0] = static_cast<float>(x) * inv_x;
      p[1] = static_cast<float>(y) * inv_x;
      for (int c = 0; c < 3; ++c) {
        p[2 + c] = static_cast<float>(image.at(x, y, c)) * inv_f;
      }
    }
  }
  return features;
}

void GaussianFilter::apply(std::span<const float> values, int channels,
                           std::span<float> out) const {
  if (channels < 1) {
    throw InputError("filter channel count must be positive");
  }
  const std::size_t expected = size() * static_cast<std::size_t>(channels);
  if (values.size() != expected || out.size() != expected) {
    throw InputError("filter input length " + std::to_string(values.size()) +
                     " does not match " + std::to_string(expected));
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw InputError("filter input contains a non-finite value");
    }
  }
  apply_unchecked(values, channels, out);
}

std::vector<float> GaussianFilter::apply(std::span<const float> values) const {
  std::vector<float> out(values.size());
  apply(values, 1, out);
  return out;
}

namespace {

/// Open-addressing map from integer lattice keys to dense vertex indices.
class KeyTable {
 public:
  KeyTable(int key_size, std::size_t expected)
      : key_size_(key_size) {
    std::size_t cap = 64;
    while (cap < 2 * expected) cap <<= 1;
    slots_.assign(cap, -1);
  }

  std::size_t size() const { return count_; }
  const std::int32_t* key(std::int32_t index) const {
    return keys_.data() + static_cast<std::size_t>(index) * key_size_;
  }

  std::int32_t find(const std::int32_t* key) const {
    std::size_t h = hash(key) & (slots_.size() - 1);
    while (true) {
      const std::int32_t idx = slots_[h];
      if (idx < 0) return -1;
      if (std::equal(key, key + key_size_, this->key(idx))) return idx;
      h = (h + 1) & (slots_.size() - 1);
    }
  }

  std::int32_t insert(const std::int32_t* key) {
    if (2 * (count_ + 1) > slots_.size()) grow();
    std::size_t h = hash(key) & (slots_.size() - 1);
    while (true) {
      const std::int32_t idx = slots_[h];
      if (idx < 0) {
        const auto fresh = static_cast<std::int32_t>(count_++);
        keys_.insert(keys_.end(), key, key + key_size_);
        slots_[h] = fresh;
        return fresh;
      }
      if (std::equal(key, key + key_size_, this->key(idx))) return idx;
      h = (h + 1) & (slots_.size() - 1);
    }
  }

 private:
  std::size_t hash(const std::int32_t* key) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < key_size_; ++i) {
      h ^= static_cast<std::uint32_t>(key[i]);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }

  void grow() {
    std::vector<std::int32_t> bigger(slots_.size() * 2, -1);
    for (std::int32_t idx = 0; idx < static_cast<std::int32_t>(count_); ++idx) {
      std::size_t h = hash(key(idx)) & (bigger.size() - 1);
      while (bigger[h] >= 0) h = (h + 1) & (bigger.size() - 1);
      bigger[h] = idx;
    }
    slots_.swap(bigger);
  }

  int key_size_;
  std::size_t count_ = 0;
  std::vector<std::int32_t> keys_;
  std::vector<std::int32_t> slots_;
};

/// Vertex keys packed into one integer by mixed radix, for the blur-neighbor
/// search. Each coordinate gets room for stencil offsets of up to `margin`
/// beyond the occupied range, so base + offset packs to base_packed + delta.
class PackedIndex {
 public:
  static std::optional<PackedIndex> build(const KeyTable& table, int dims, int margin) {
    PackedIndex out;
    const auto count = static_cast<std::int32_t>(table.size());
    out.dims_ = dims;
    out.lo_.assign(dims, 0);
    out.stride_.assign(dims, 0);
    std::vector<std::int64_t> hi(dims, 0);
    for (int i = 0; i < dims; ++i) {
      out.lo_[i] = hi[i] = table.key(0)[i];
    }
    for (std::int32_t v = 1; v < count; ++v) {
      for (int i = 0; i < dims; ++i) {
        out.lo_[i] = std::min<std::int64_t>(out.lo_[i], table.key(v)[i]);
        hi[i] = std::max<std::int64_t>(hi[i], table.key(v)[i]);
      }
    }
    constexpr std::uint64_t kLimit = std::uint64_t{1} << 62;
    std::uint64_t stride = 1;
    for (int i = 0; i < dims; ++i) {
      out.lo_[i] -= margin;
      const auto width = static_cast<std::uint64_t>(hi[i] + margin - out.lo_[i] + 1);
      if (stride > kLimit / width) return std::nullopt;
      out.stride_[i] = stride;
      stride *= width;
    }

    int bits = 6;
    while ((std::size_t{1} << bits) < 4 * static_cast<std::size_t>(count)) ++bits;
    out.shift_ = 64 - bits;
    out.keys_.assign(std::size_t{1} << bits, kEmpty);
    out.index_.assign(std::size_t{1} << bits, -1);
    const std::size_t mask = out.keys_.size() - 1;
    for (std::int32_t v = 0; v < count; ++v) {
      const std::uint64_t k = out.pack(table.key(v));
      std::size_t h = out.slot(k);
      while (out.keys_[h] != kEmpty) h = (h + 1) & mask;
      out.keys_[h] = k;
      out.index_[h] = v;
    }
    return out;
  }

  std::uint64_t pack(const std::int32_t* key) const {
    std::uint64_t k = 0;
    for (int i = 0; i < dims_; ++i) {
      k += static_cast<std::uint64_t>(key[i] - lo_[i]) * stride_[i];
    }
    return k;
  }

  /// Packed displacement of an offset; added with wrap-around.
  std::uint64_t delta(const std::int32_t* offset) const {
    std::uint64_t k = 0;
    for (int i = 0; i < dims_; ++i) {
      k += static_cast<std::uint64_t>(static_cast<std::int64_t>(offset[i])) * stride_[i];
    }
    return k;
  }

  std::int32_t find(std::uint64_t k) const {
    const std::size_t mask = keys_.size() - 1;
    for (std::size_t h = slot(k);; h = (h + 1) & mask) {
      if (keys_[h] == k) return index_[h];
      if (keys_[h] == kEmpty) return -1;
    }
  }

 private:
  static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

  std::size_t slot(std::uint64_t k) const {
    return static_cast<std::size_t>((k * 0x9E3779B97F4A7C15ull) >> shift_);
  }

  int dims_ = 0;
  int shift_ = 0;
  std::vector<std::int64_t> lo_;
  std::vector<std::uint64_t> stride_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::int32_t> index_;
};

struct StencilEntry {
  std::vector<std::int32_t> offset;
  float weight;
};

/// The product of [0.5 1 0.5] blurs along all d+1 lattice directions, as a
/// list of distinct key offsets with their summed weights. Direction k < d
/// moves a key by (d+1) e_k - 1; direction d moves it by -1.
std::vector<StencilEntry> composite_stencil(int d) {
  const int d1 = d + 1;
  std::map<std::vector<std::int32_t>, double> merged;
  int combos = 1;
  for (int i = 0; i < d1; ++i) combos *= 3;
  std::vector<std::int32_t> offset(d);
  for (int code = 0; code < combos; ++code) {
    std::fill(offset.begin(), offset.end(), 0);
    double weight = 1.0;
    int rest = code;
    for (int dir = 0; dir < d1; ++dir) {
      const int step = rest % 3 - 1;
      rest /= 3;
      if (step == 0) continue;
      weight *= 0.5;
      for (int i = 0; i < d; ++i) offset[i] -= step;
      if (dir < d) offset[dir] += step * d1;
    }
    merged[offset] += weight;
  }
  std::vector<StencilEntry> out;
  out.reserve(merged.size());
  for (const auto& [off, w] : merged) {
    out.push_back({off, static_cast<float>(w)});
  }
  return out;
}

/// Gain of the raw lattice relative to a unit Gaussian for a dense uniform
/// point cloud: (2 pi)^{d/2} / (2^{d+1} * vertex cell volume).
double dense_gain(int d, double inv_std_dev) {
  const double d1 = d + 1.0;
  const double cell = std::pow(d1, d - 0.5) / std::pow(inv_std_dev, d);
  return std::pow(2.0 * std::numbers::pi, 0.5 * d) / (std::pow(2.0, d1) * cell);
}

}  // namespace

PermutohedralLattice::PermutohedralLattice(const FeatureMatrix& features)
    : dims_(features.dims), point_count_(features.count()) {
  if (dims_ < 1 || dims_ > kMaxDims) {
    throw InputError("lattice supports 1.." + std::to_string(kMaxDims) +
                     " feature dimensions, got " + std::to_string(dims_));
  }
  if (point_count_ == 0) {
    throw InputError("lattice needs at least one point");
  }
  for (float v : features.data) {
    if (!std::isfinite(v)) {
      throw InputError("lattice features must be finite");
    }
  }
  find_coincident_points(features);

  // Layer k is shifted by frac((i + 1) * k / golden ratio) along feature i.
  std::vector<double> shift(dims_);
  layers_.reserve(kLayers);
  for (int k = 0; k < kLayers; ++k) {
    for (int i = 0; i < dims_; ++i) {
      const double t = (i + 1) * k * 0.6180339887498949;
      shift[i] = t - std::floor(t);
    }
    layers_.push_back(build_layer(features, shift));
    calibrate_gain(layers_.back(), features);
  }
}

std::size_t PermutohedralLattice::vertex_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.vertex_count;
  return total;
}

PermutohedralLattice::Layer PermutohedralLattice::build_layer(
    const FeatureMatrix& features, std::span<const double> shift) const {
  const int d = dims_;
  const int d1 = d + 1;
  Layer layer;

  // Scaling that makes splat + blur + slice approximate a unit-variance
  // Gaussian in feature space.
  const double inv_std_dev = std::sqrt(2.0 / 3.0) * d1 * kWidthFactor;
  std::vector<double> scale(d);
  for (int i = 0; i < d; ++i) {
    scale[i] = inv_std_dev / std::sqrt((i + 1.0) * (i + 2.0));
  }

  layer.splat_vertex.resize(point_count_ * d1);
  layer.splat_weight.resize(point_count_ * d1);
  KeyTable table(d, point_count_ * d1);

  std::vector<double> elevated(d1), barycentric(d + 2);
  std::vector<std::int32_t> rem0(d1), rank(d1), key(d);

  for (std::size_t n = 0; n < point_count_; ++n) {
    const auto f = features.point(n);

    // Project onto the hyperplane sum(x) = 0 of R^{d+1}.
    double sm = 0.0;
    for (int i = d; i > 0; --i) {
      const double cf = (f[i - 1] + shift[i - 1]) * scale[i - 1];
      elevated[i] = sm - i * cf;
      sm += cf;
    }
    elevated[0] = sm;

    // Nearest remainder-0 lattice point.
    int sum = 0;
    for (int i = 0; i < d1; ++i) {
      const double v = elevated[i] / d1;
      const double up = std::ceil(v) * d1;
      const double down = std::floor(v) * d1;
      rem0[i] = static_cast<std::int32_t>(up - elevated[i] < elevated[i] - down
                                              ? up
                                              : down);
      sum += rem0[i];
    }
    sum /= d1;

    std::fill(rank.begin(), rank.end(), 0);
    for (int i = 0; i < d; ++i) {
      const double di = elevated[i] - rem0[i];
      for (int j = i + 1; j < d1; ++j) {
        if (di < elevated[j] - rem0[j]) {
          ++rank[i];
        } else {
          ++rank[j];
        }
      }
    }
    // Bring the point back onto the hyperplane if rounding moved it off.
    for (int i = 0; i < d1; ++i) {
      rank[i] += sum;
      if (rank[i] < 0) {
        rank[i] += d1;
        rem0[i] += d1;
      } else if (rank[i] > d) {
        rank[i] -= d1;
        rem0[i] -= d1;
      }
    }

    std::fill(barycentric.begin(), barycentric.end(), 0.0);
    for (int i = 0; i < d1; ++i) {
      const double v = (elevated[i] - rem0[i]) / d1;
      barycentric[d - rank[i]] += v;
      barycentric[d - rank[i] + 1] -= v;
    }
    barycentric[0] += 1.0 + barycentric[d + 1];

    for (int remainder = 0; remainder < d1; ++remainder) {
      for (int i = 0; i < d; ++i) {
        key[i] = rem0[i] + remainder;
        if (rank[i] > d - remainder) {
          key[i] -= d1;
        }
      }
      layer.splat_vertex[n * d1 + remainder] = table.insert(key.data());
      layer.splat_weight[n * d1 + remainder] =
          static_cast<float>(barycentric[remainder]);
    }
  }
  layer.vertex_count = table.size();

  const auto stencil = composite_stencil(d);
  std::map<std::vector<std::int32_t>, float> stencil_weight;
  for (const auto& e : stencil) stencil_weight.emplace(e.offset, e.weight);

  // The stencil is symmetric, so each vertex pair is found once from the
  // side where the offset is positive and stored in both rows.
  struct Link {
    std::int32_t from;
    std::int32_t to;
    float weight;
  };
  std::vector<Link> links;
  const std::vector<std::int32_t> zero(d, 0);
  float center = 0.0f;
  std::vector<std::int32_t> half_offsets;
  std::vector<float> half_weights;
  for (const auto& e : stencil) {
    if (e.offset == zero) {
      center = e.weight;
    } else if (std::lexicographical_compare(zero.begin(), zero.end(), e.offset.begin(),
                                            e.offset.end())) {
      half_offsets.insert(half_offsets.end(), e.offset.begin(), e.offset.end());
      half_weights.push_back(e.weight);
    }
  }
  int margin = 0;
  for (std::int32_t o : half_offsets) margin = std::max(margin, std::abs(o));
  const auto link = [&](std::int32_t self, std::int32_t nb, float w) {
    links.push_back({self, nb, w});
    links.push_back({nb, self, w});
  };
  if (const auto packed = PackedIndex::build(table, d, margin)) {
    std::vector<std::uint64_t> deltas(half_weights.size());
    for (std::size_t e = 0; e < deltas.size(); ++e) {
      deltas[e] = packed->delta(half_offsets.data() + e * d);
    }
    for (std::size_t v = 0; v < layer.vertex_count; ++v) {
      const auto self = static_cast<std::int32_t>(v);
      const std::uint64_t base = packed->pack(table.key(self));
      for (std::size_t e = 0; e < deltas.size(); ++e) {
        const std::int32_t nb = packed->find(base + deltas[e]);
        if (nb >= 0) link(self, nb, half_weights[e]);
      }
    }
  } else {
    for (std::size_t v = 0; v < layer.vertex_count; ++v) {
      const auto self = static_cast<std::int32_t>(v);
      const std::int32_t* base = table.key(self);
      for (std::size_t e = 0; e < half_weights.size(); ++e) {
        const std::int32_t* offset = half_offsets.data() + e * d;
        for (int i = 0; i < d; ++i) key[i] = base[i] + offset[i];
        const std::int32_t nb = table.find(key.data());
        if (nb >= 0) link(self, nb, half_weights[e]);
      }
    }
  }
  layer.blur_begin.assign(layer.vertex_count + 1, 0);
  for (const auto& l : links) ++layer.blur_begin[l.from + 1];
  for (std::size_t v = 0; v < layer.vertex_count; ++v) {
    layer.blur_begin[v + 1] += layer.blur_begin[v] + 1;
  }
  layer.blur_vertex.resize(layer.blur_begin.back());
  layer.blur_weight.resize(layer.blur_begin.back());
  std::vector<std::size_t> fill(layer.blur_begin.begin(), layer.blur_begin.end() - 1);
  for (std::size_t v = 0; v < layer.vertex_count; ++v) {
    layer.blur_vertex[fill[v]] = static_cast<std::int32_t>(v);
    layer.blur_weight[fill[v]++] = center;
  }
  for (const auto& l : links) {
    layer.blur_vertex[fill[l.from]] = l.to;
    layer.blur_weight[fill[l.from]++] = l.weight;
  }

  // Raw response of each point to its own impulse: only the vertices of its
  // own simplex take part, so the stencil weight of each vertex pair suffices.
  layer.self_response.resize(point_count_);
  std::vector<std::int32_t> diff(d);
  for (std::size_t n = 0; n < point_count_; ++n) {
    double acc = 0.0;
    for (int r = 0; r < d1; ++r) {
      const std::int32_t* kr = table.key(layer.splat_vertex[n * d1 + r]);
      for (int q = 0; q < d1; ++q) {
        const std::int32_t* kq = table.key(layer.splat_vertex[n * d1 + q]);
        for (int i = 0; i < d; ++i) diff[i] = kq[i] - kr[i];
        if (auto it = stencil_weight.find(diff); it != stencil_weight.end()) {
          acc += static_cast<double>(layer.splat_weight[n * d1 + r]) *
                 layer.splat_weight[n * d1 + q] * it->second;
        }
      }
    }
    layer.self_response[n] = static_cast<float>(acc);
  }

  layer.gain = static_cast<float>(dense_gain(d, inv_std_dev));
  return layer;
}

void PermutohedralLattice::find_coincident_points(const FeatureMatrix& features) {
  std::vector<std::uint32_t> order(point_count_);
  std::iota(order.begin(), order.end(), 0u);
  auto less = [&](std::uint32_t a, std::uint32_t b) {
    const auto pa = features.point(a);
    const auto pb = features.point(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<std::uint32_t> group(point_count_);
  std::uint32_t groups = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && less(order[k - 1], order[k])) ++groups;
    group[order[k]] = groups;
  }
  if (groups + 1 == point_count_) return;
  group_ = std::move(group);
  group_size_.assign(groups + 1, 0.0f);
  for (auto g : group_) group_size_[g] += 1.0f;
}

void PermutohedralLattice::calibrate_gain(Layer& layer, const FeatureMatrix& features) const {
  const std::size_t n = point_count_;
  const std::size_t stride = std::max<std::size_t>(1, n / kCalibrationSamples);

  const std::vector<float> ones(n, 1.0f);
  std::vector<float> in(n, 1.0f);
  if (!group_.empty()) {
    for (std::size_t i = 0; i < n; ++i) in[i] = group_size_[group_[i]];
  }
  std::vector<double> raw(n, 0.0);
  layer.gain = 1.0f;
  add_off_diagonal(layer, ones, in, 1, raw);

  // Pairs further apart than this contribute less than exp(-32).
  constexpr double kCutoff2 = 64.0;
  double exact_sum = 0.0;
  double lattice_sum = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    const auto pi = features.point(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || (!group_.empty() && group_[j] == group_[i])) continue;
      const auto pj = features.point(j);
      double dist2 = 0.0;
      for (int k = 0; k < dims_ && dist2 < kCutoff2; ++k) {
        const double diff = static_cast<double>(pi[k]) - pj[k];
        dist2 += diff * diff;
      }
      if (dist2 < kCutoff2) acc += std::exp(-0.5 * dist2);
    }
    exact_sum += acc;
    lattice_sum += raw[i];
  }
  // Isolated points give no usable signal; keep the dense-cloud gain.
  const double dense = dense_gain(dims_, std::sqrt(2.0 / 3.0) * (dims_ + 1) * kWidthFactor);
  layer.gain = static_cast<float>(
      lattice_sum > 1e-6 && exact_sum > 1e-6 ? exact_sum / lattice_sum : dense);
}

void PermutohedralLattice::add_off_diagonal(const Layer& layer, std::span<const float> values,
                                            std::span<const float> in, int channels,
                                            std::span<double> off) const {
  const int d1 = dims_ + 1;
  const std::size_t c = static_cast<std::size_t>(channels);
  // Double accumulators keep products of small values out of the denormal
  // range, where arithmetic is very slow.
  std::vector<double> lattice(layer.vertex_count * c, 0.0);
  std::vector<double> blurred(layer.vertex_count * c, 0.0);

  for (std::size_t n = 0; n < point_count_; ++n) {
    const float* src = values.data() + n * c;
    for (int r = 0; r < d1; ++r) {
      const std::size_t vi = layer.splat_vertex[n * d1 + r];
      const double w = layer.splat_weight[n * d1 + r];
      double* dst = lattice.data() + vi * c;
      for (std::size_t k = 0; k < c; ++k) dst[k] += w * src[k];
    }
  }

  for (std::size_t v = 0; v < layer.vertex_count; ++v) {
    double* dst = blurred.data() + v * c;
    for (std::size_t e = layer.blur_begin[v]; e < layer.blur_begin[v + 1]; ++e) {
      const double* src =
          lattice.data() + static_cast<std::size_t>(layer.blur_vertex[e]) * c;
      const double w = layer.blur_weight[e];
      for (std::size_t k = 0; k < c; ++k) dst[k] += w * src[k];
    }
  }

  std::vector<double> acc(c);
  for (std::size_t n = 0; n < point_count_; ++n) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int r = 0; r < d1; ++r) {
      const std::size_t vi = layer.splat_vertex[n * d1 + r];
      const double w = layer.splat_weight[n * d1 + r];
      const double* src = blurred.data() + vi * c;
      for (std::size_t k = 0; k < c; ++k) acc[k] += w * src[k];
    }
    const double self = layer.self_response[n];
    for (std::size_t k = 0; k < c; ++k) {
      const double diag = self * in[n * c + k];
      double o = acc[k] - diag;
      // Snap cancellation noise so non-negative input stays non-negative.
      if (std::abs(o) <= 1e-6 * (std::abs(acc[k]) + std::abs(diag))) {
        o = 0.0;
      }
      off[n * c + k] += layer.gain * o;
    }
  }
}

void PermutohedralLattice::apply_unchecked(std::span<const float> values,
                                           int channels,
                                           std::span<float> out) const {
  const std::size_t c = static_cast<std::size_t>(channels);

  // Coincident points: the diagonal block covers the whole group.
  std::vector<float> in;
  if (!group_.empty()) {
    std::vector<float> group_sum(group_size_.size() * c, 0.0f);
    for (std::size_t n = 0; n < point_count_; ++n) {
      for (std::size_t k = 0; k < c; ++k) group_sum[group_[n] * c + k] += values[n * c + k];
    }
    in.resize(values.size());
    for (std::size_t n = 0; n < point_count_; ++n) {
      std::copy_n(group_sum.data() + group_[n] * c, c, in.data() + n * c);
    }
  }
  const std::span<const float> diag_in = group_.empty() ? values : std::span<const float>(in);

  std::vector<double> off(values.size(), 0.0);
  for (const auto& layer : layers_) add_off_diagonal(layer, values, diag_in, channels, off);
  const double inv_layers = 1.0 / static_cast<double>(layers_.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    out[k] = static_cast<float>(off[k] * inv_layers + diag_in[k]);
  }
}

PermutohedralLattice build_lattice(const RgbImage& image, const FeatureSpec& spec) {
  return PermutohedralLattice(bilateral_features(image, spec));
}

ExactGaussianFilter::ExactGaussianFilter(FeatureMatrix features)
    : features_(std::move(features)) {
  if (features_.count() > kMaxPoints) {
    throw InputError("exact filter limited to " + std::to_string(kMaxPoints) +
                     " points, got " + std::to_string(features_.count()));
  }
}

double ExactGaussianFilter::kernel(std::size_t i, std::size_t j) const {
  const auto a = features_.point(i);
  const auto b = features_.point(j);
  double dist2 = 0.0;
  for (int k = 0; k < features_.dims; ++k) {
    const double diff = static_cast<double>(a[k]) - b[k];
    dist2 += diff * diff;
  }
  return std::exp(-0.5 * dist2);
}

void ExactGaussianFilter::apply_unchecked(std::span<const float> values,
                                          int channels,
                                          std::span<float> out) const {
  const std::size_t n = size();
  const std::size_t c = static_cast<std::size_t>(channels);
  std::vector<double> acc(c);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double k = kernel(i, j);
      for (std::size_t ch = 0; ch < c; ++ch) {
        acc[ch] += k * values[j * c + ch];
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      out[i * c + ch] = static_cast<float>(acc[ch]);
    }
  }
}

std::vector<float> exact_filter(const FeatureMatrix& features,
                                std::span<const float> values) {
  return ExactGaussianFilter(features).apply(values);
}

}  // namespace mfstereo
