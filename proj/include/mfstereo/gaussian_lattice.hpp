#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mfstereo/image.hpp"

namespace mfstereo {

/// Bandwidths of the bilateral kernel
///   k(i,j) = exp(-|x_i - x_j|^2 / 2 sigma_x^2 - |f_i - f_j|^2 / 2 sigma_f^2)
/// with x the pixel position and f the RGB color.
struct FeatureSpec {
  float sigma_x = 5.0f;
  float sigma_f = 55.0f;

  void validate() const;
};

/// N points in an F-dimensional feature space, point-major. Features are
/// already divided by their bandwidth, so the kernel is exp(-|p_i - p_j|^2 / 2).
struct FeatureMatrix {
  int dims = 0;
  std::vector<float> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t count, int dims)
      : dims(dims), data(count * static_cast<std::size_t>(dims), 0.0f) {}

  std::size_t count() const { return dims == 0 ? 0 : data.size() / dims; }
  std::span<const float> point(std::size_t i) const {
    return {data.data() + i * dims, static_cast<std::size_t>(dims)};
  }
  std::span<float> point(std::size_t i) {
    return {data.data() + i * dims, static_cast<std::size_t>(dims)};
  }
};

/// (x/sigma_x, y/sigma_x, r/sigma_f, g/sigma_f, b/sigma_f) per pixel,
/// row-major over the image.
FeatureMatrix bilateral_features(const RgbImage& image, const FeatureSpec& spec);

/// A linear operator v -> (sum_j k(i,j) v_j)_i over a fixed point set, the sum
/// including j = i with k(i,i) = 1. Values are point-major with `channels`
/// interleaved entries per point; each channel is filtered independently.
class GaussianFilter {
 public:
  virtual ~GaussianFilter() = default;

  virtual std::size_t size() const = 0;

  /// Throws InputError on a length mismatch or non-finite input.
  void apply(std::span<const float> values, int channels,
             std::span<float> out) const;

  std::vector<float> apply(std::span<const float> values) const;

 protected:
  virtual void apply_unchecked(std::span<const float> values, int channels,
                               std::span<float> out) const = 0;
};

/// Permutohedral lattice (Adams, Baek & Davis 2010). Points are splatted onto
/// the enclosing simplex of the scaled A*_d lattice with barycentric weights,
/// blurred with [1 2 1] along each of the d+1 lattice directions and sliced
/// back.
///
/// The d+1 blur passes are applied as one composite stencil between occupied
/// vertices, i.e. exactly as if every lattice vertex were present, so no mass
/// is lost through empty intermediate vertices. The diagonal of the operator
/// is replaced by the exact k(i,i) = 1 and the off-diagonal response is scaled
/// by a gain fitted at build time against exact kernel sums at a fixed
/// subsample of points. Points with bitwise identical features share one
/// diagonal block (k = 1 between them), so they always get equal outputs.
///
/// Two lattices, the second offset by a fixed shift in feature space, are
/// averaged; this cancels much of the dependence of the approximate kernel on
/// where points fall inside their simplices. Feature scale is widened by
/// kWidthFactor over the textbook value, which brings the effective kernel
/// width close to the unit Gaussian.
///
/// apply() is const and owns its scratch buffers, so concurrent calls on one
/// lattice are safe.
class PermutohedralLattice final : public GaussianFilter {
 public:
  static constexpr int kMaxDims = 8;
  static constexpr int kLayers = 2;
  static constexpr double kWidthFactor = 1.08;
  static constexpr std::size_t kCalibrationSamples = 256;

  explicit PermutohedralLattice(const FeatureMatrix& features);

  std::size_t size() const override { return point_count_; }
  int dims() const { return dims_; }
  /// Occupied vertices summed over both lattices.
  std::size_t vertex_count() const;

 protected:
  void apply_unchecked(std::span<const float> values, int channels,
                       std::span<float> out) const override;

 private:
  struct Layer {
    std::size_t vertex_count = 0;
    // (dims_+1) entries per point.
    std::vector<std::int32_t> splat_vertex;
    std::vector<float> splat_weight;
    // Composite blur in CSR form over occupied vertices.
    std::vector<std::size_t> blur_begin;
    std::vector<std::int32_t> blur_vertex;
    std::vector<float> blur_weight;
    // Response of each point to its own unit impulse through the raw lattice.
    std::vector<float> self_response;
    float gain = 1.0f;
  };

  Layer build_layer(const FeatureMatrix& features, std::span<const double> shift) const;
  void find_coincident_points(const FeatureMatrix& features);
  void calibrate_gain(Layer& layer, const FeatureMatrix& features) const;
  /// Adds the layer's gain-scaled off-diagonal response to `off`. `in` holds
  /// per-point values, already summed over coincident groups.
  void add_off_diagonal(const Layer& layer, std::span<const float> values,
                        std::span<const float> in, int channels,
                        std::span<double> off) const;

  int dims_ = 0;
  std::size_t point_count_ = 0;
  std::vector<Layer> layers_;
  // Coincident-point group of each point; empty when all points are distinct.
  std::vector<std::uint32_t> group_;
  std::vector<float> group_size_;
};

PermutohedralLattice build_lattice(const RgbImage& image, const FeatureSpec& spec);

/// Direct O(N^2) evaluation of the Gaussian sum. Test oracle and reference for
/// small instances.
class ExactGaussianFilter final : public GaussianFilter {
 public:
  static constexpr std::size_t kMaxPoints = 10000;

  /// Throws InputError when the point count exceeds kMaxPoints.
  explicit ExactGaussianFilter(FeatureMatrix features);

  std::size_t size() const override { return features_.count(); }

  /// k(i,j) between two points of the set.
  double kernel(std::size_t i, std::size_t j) const;

 protected:
  void apply_unchecked(std::span<const float> values, int channels,
                       std::span<float> out) const override;

 private:
  FeatureMatrix features_;
};

std::vector<float> exact_filter(const FeatureMatrix& features,
                                std::span<const float> values);

}  // namespace mfstereo
