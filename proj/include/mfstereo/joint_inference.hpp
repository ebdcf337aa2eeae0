#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mfstereo/cost_volume.hpp"
#include "mfstereo/gaussian_lattice.hpp"
#include "mfstereo/image.hpp"

namespace mfstereo {

/// Factored marginals Q_i(d): one probability row of `levels` entries per
/// pixel, pixel-major.
class BeliefVolume {
 public:
  BeliefVolume(int width, int height, int levels)
      : width_(width),
        height_(height),
        levels_(levels),
        q_(static_cast<std::size_t>(width) * height * levels, 0.0f) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int levels() const { return levels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::span<const float> pixel(std::size_t i) const {
    return {q_.data() + i * levels_, static_cast<std::size_t>(levels_)};
  }
  std::span<float> pixel(std::size_t i) {
    return {q_.data() + i * levels_, static_cast<std::size_t>(levels_)};
  }
  float at(int x, int y, int d) const {
    return q_[(static_cast<std::size_t>(y) * width_ + x) * levels_ + d];
  }

  const std::vector<float>& data() const { return q_; }
  std::vector<float>& data() { return q_; }

  friend bool operator==(const BeliefVolume&, const BeliefVolume&) = default;

 private:
  int width_;
  int height_;
  int levels_;
  std::vector<float> q_;
};

/// Weight omega of the fully connected Potts term
/// omega * [d_i != d_j] * k(i,j).
struct FullPairParams {
  float omega = 1.0f;
};

/// Locally connected term omega_t * w(i,j) * phi(d_i, d_j) over 4-connected
/// neighbors. w(i,j) is lambda1 / lambda2 / lambda3 as the summed absolute RGB
/// difference falls below mu1, below mu2, or above; phi is 0, beta, 1 for label
/// gaps 0, 1, and more.
struct LocalPairParams {
  float omega_t = 1.0f;
  float lambda1 = 3.5f;
  float lambda2 = 3.0f;
  float lambda3 = 1.0f;
  float mu1 = 7.0f;
  float mu2 = 15.0f;
  float beta = 0.5f;

  float edge_weight(int color_difference) const;
  void validate() const;
};

struct InferenceConfig {
  int iterations = 5;
  FullPairParams full;
  LocalPairParams local;
  FeatureSpec feature;
  /// Stop early once no belief changes by more than this between iterations.
  std::optional<float> early_exit_tolerance;

  void validate() const;
};

/// phi(a, b) of the local term.
float smoothness_multiplier(int a, int b, float beta);

/// Edge weights of the 4-connected grid: right(x, y) links (x, y)-(x+1, y),
/// down(x, y) links (x, y)-(x, y+1). Entries off the grid are zero.
class LocalEdgeWeights {
 public:
  LocalEdgeWeights(int width, int height)
      : width_(width),
        height_(height),
        right_(static_cast<std::size_t>(width) * height, 0.0f),
        down_(static_cast<std::size_t>(width) * height, 0.0f) {}

  int width() const { return width_; }
  int height() const { return height_; }
  float& right(int x, int y) { return right_[static_cast<std::size_t>(y) * width_ + x]; }
  float right(int x, int y) const { return right_[static_cast<std::size_t>(y) * width_ + x]; }
  float& down(int x, int y) { return down_[static_cast<std::size_t>(y) * width_ + x]; }
  float down(int x, int y) const { return down_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Calls fn(neighbor_x, neighbor_y, weight) for each grid neighbor of (x, y).
  template <typename Fn>
  void for_each_neighbor(int x, int y, Fn&& fn) const {
    if (x > 0) fn(x - 1, y, right(x - 1, y));
    if (x + 1 < width_) fn(x + 1, y, right(x, y));
    if (y > 0) fn(x, y - 1, down(x, y - 1));
    if (y + 1 < height_) fn(x, y + 1, down(x, y));
  }

 private:
  int width_;
  int height_;
  std::vector<float> right_;
  std::vector<float> down_;
};

LocalEdgeWeights local_edge_weights(const RgbImage& image, const LocalPairParams& params);

/// Q_i(d) = exp(-cost(i,d)) / Z_i.
BeliefVolume init_beliefs(const CostVolume& cv);

/// Potts compatibility transform: out(d) = omega * sum_{l != d} filtered(l).
void potts_transform(std::span<const float> filtered, float omega, std::span<float> out);

/// Local compatibility transform:
/// out(d) = omega_t * sum_l phi(d, l) * aggregated(l).
void local_transform(std::span<const float> aggregated, float omega_t, float beta,
                     std::span<float> out);

/// One synchronous mean-field update of every pixel:
///   message passing  Qt_i(l) = sum_{j != i} k(i,j) Q_j(l),
///                    Pt_i(l) = sum_{j in N(i)} w(i,j) Q_j(l);
///   compatibility    Qh = potts_transform(Qt), Ph = local_transform(Pt);
///   local update     Q_i(d) ~ exp(-cost(i,d) - Qh_i(d) - Ph_i(d)).
/// `filter` evaluates sum_j k(i,j) v_j including j = i; the self term is
/// subtracted here. It is not called when omega is zero.
/// Throws NumericalError on a non-finite update.
BeliefVolume mf_iteration(const BeliefVolume& q, const CostVolume& cv,
                          const GaussianFilter* filter,
                          const LocalEdgeWeights& weights,
                          const InferenceConfig& cfg);

/// Called after each iteration with the 1-based iteration index and the new
/// beliefs.
using IterationObserver = std::function<void(int, const BeliefVolume&)>;

/// Initializes from the unary cost and runs cfg.iterations updates, building a
/// permutohedral lattice over `guide` when the fully connected term is active.
BeliefVolume run_inference(const CostVolume& cv, const RgbImage& guide,
                           const InferenceConfig& cfg,
                           const IterationObserver& observer = {});

/// Same, with a caller-supplied filter (e.g. ExactGaussianFilter).
BeliefVolume run_inference(const CostVolume& cv, const RgbImage& guide,
                           const InferenceConfig& cfg, const GaussianFilter* filter,
                           const IterationObserver& observer = {});

/// argmax_d Q_i(d), ties to the smaller disparity.
DisparityMap wta(const BeliefVolume& q);

/// Mean Shannon entropy (nats) of the belief rows.
double mean_entropy(const BeliefVolume& q);

/// Exact energy of a labeling,
///   sum_i cost(i, d_i) + sum_{i<j} omega [d_i != d_j] k(i,j)
///     + sum_i sum_{j in N(i)} omega_t w(i,j) phi(d_i, d_j),
/// O(N^2); limited to ExactGaussianFilter::kMaxPoints pixels.
double gibbs_energy(const DisparityMap& labels, const CostVolume& cv,
                    const RgbImage& guide, const InferenceConfig& cfg);

}  // namespace mfstereo
