#include "mfstereo/joint_inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <string>

namespace mfstereo {

float LocalPairParams::edge_weight(int color_difference) const {
  const auto diff = static_cast<float>(color_difference);
  if (diff < mu1) return lambda1;
  if (diff < mu2) return lambda2;
  return lambda3;
}

void LocalPairParams::validate() const {
  if (!(omega_t >= 0.0f) || !std::isfinite(omega_t)) {
    throw InputError("omega_t must be finite and non-negative");
  }
  if (!(mu1 < mu2)) throw InputError("mu1 must be smaller than mu2");
  if (!(lambda1 >= lambda2 && lambda2 >= lambda3 && lambda3 >= 0.0f)) {
    throw InputError("edge weights must satisfy lambda1 >= lambda2 >= lambda3 >= 0");
  }
  if (!(beta >= 0.0f && beta <= 1.0f)) throw InputError("beta must lie in [0, 1]");
}

void InferenceConfig::validate() const {
  if (iterations < 1) throw InputError("iterations must be at least 1");
  if (!(full.omega >= 0.0f) || !std::isfinite(full.omega)) {
    throw InputError("omega must be finite and non-negative");
  }
  local.validate();
  feature.validate();
  if (early_exit_tolerance && !(*early_exit_tolerance > 0.0f)) {
    throw InputError("early exit tolerance must be positive");
  }
}

float smoothness_multiplier(int a, int b, float beta) {
  const int gap = std::abs(a - b);
  if (gap == 0) return 0.0f;
  if (gap == 1) return beta;
  return 1.0f;
}

LocalEdgeWeights local_edge_weights(const RgbImage& image, const LocalPairParams& params) {
  LocalEdgeWeights weights(image.width(), image.height());
  auto color_diff = [&](int x0, int y0, int x1, int y1) {
    int sum = 0;
    for (int c = 0; c < 3; ++c) {
      sum += std::abs(static_cast<int>(image.at(x0, y0, c)) - image.at(x1, y1, c));
    }
    return sum;
  };
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (x + 1 < image.width()) {
        weights.right(x, y) = params.edge_weight(color_diff(x, y, x + 1, y));
      }
      if (y + 1 < image.height()) {
        weights.down(x, y) = params.edge_weight(color_diff(x, y, x, y + 1));
      }
    }
  }
  return weights;
}

namespace {

/// Normalized exp of `energy` (already negated costs) into `out`, with max
/// subtraction. Returns false when the input is not finite.
bool softmax(std::span<const double> energy, std::span<float> out) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double e : energy) {
    if (!std::isfinite(e)) return false;
    peak = std::max(peak, e);
  }
  double z = 0.0;
  for (double e : energy) z += std::exp(e - peak);
  // Probabilities this small are stored as 0 so that beliefs, and products
  // of beliefs inside the filter, never become denormal.
  constexpr double kMinBelief = 1e-30;
  for (std::size_t d = 0; d < energy.size(); ++d) {
    const double p = std::exp(energy[d] - peak) / z;
    out[d] = p < kMinBelief ? 0.0f : static_cast<float>(p);
  }
  return true;
}

}  // namespace

BeliefVolume init_beliefs(const CostVolume& cv) {
  BeliefVolume q(cv.width(), cv.height(), cv.levels());
  std::vector<double> energy(cv.levels());
  for (std::size_t i = 0; i < cv.pixel_count(); ++i) {
    const auto cost = cv.pixel(i);
    for (int d = 0; d < cv.levels(); ++d) energy[d] = -static_cast<double>(cost[d]);
    if (!softmax(energy, q.pixel(i))) {
      throw NumericalError("non-finite unary cost at pixel " + std::to_string(i));
    }
  }
  return q;
}

void potts_transform(std::span<const float> filtered, float omega, std::span<float> out) {
  double total = 0.0;
  for (float v : filtered) total += v;
  for (std::size_t d = 0; d < filtered.size(); ++d) {
    out[d] = static_cast<float>(omega * (total - filtered[d]));
  }
}

void local_transform(std::span<const float> aggregated, float omega_t, float beta,
                     std::span<float> out) {
  const int m = static_cast<int>(aggregated.size());
  double total = 0.0;
  for (float v : aggregated) total += v;
  for (int d = 0; d < m; ++d) {
    const double prev = d > 0 ? aggregated[d - 1] : 0.0;
    const double next = d + 1 < m ? aggregated[d + 1] : 0.0;
    // Labels two or more apart carry weight 1, the two adjacent ones beta.
    const double far = total - aggregated[d] - prev - next;
    out[d] = static_cast<float>(omega_t * (beta * (prev + next) + far));
  }
}

BeliefVolume mf_iteration(const BeliefVolume& q, const CostVolume& cv,
                          const GaussianFilter* filter,
                          const LocalEdgeWeights& weights,
                          const InferenceConfig& cfg) {
  const int w = q.width();
  const int h = q.height();
  const int m = q.levels();
  if (cv.width() != w || cv.height() != h || cv.levels() != m) {
    throw InputError("belief and cost volumes differ in shape");
  }
  if (weights.width() != w || weights.height() != h) {
    throw InputError("edge weights do not match the belief volume");
  }
  const float omega = cfg.full.omega;
  const float omega_t = cfg.local.omega_t;
  const std::size_t n = q.pixel_count();

  // Message passing over all pixel pairs, self term removed.
  std::vector<float> dense;
  if (omega != 0.0f) {
    if (filter == nullptr || filter->size() != n) {
      throw InputError("fully connected term needs a filter over every pixel");
    }
    dense.resize(q.data().size());
    filter->apply(q.data(), m, dense);
    for (std::size_t k = 0; k < dense.size(); ++k) dense[k] -= q.data()[k];
  }

  BeliefVolume next(w, h, m);
  std::vector<float> aggregated(m), potts(m, 0.0f), local(m, 0.0f);
  std::vector<double> energy(m);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (omega != 0.0f) {
        potts_transform({dense.data() + i * m, static_cast<std::size_t>(m)}, omega, potts);
      }
      if (omega_t != 0.0f) {
        std::fill(aggregated.begin(), aggregated.end(), 0.0f);
        weights.for_each_neighbor(x, y, [&](int nx, int ny, float wt) {
          const auto qj = q.pixel(static_cast<std::size_t>(ny) * w + nx);
          for (int l = 0; l < m; ++l) aggregated[l] += wt * qj[l];
        });
        local_transform(aggregated, omega_t, cfg.local.beta, local);
      }
      const auto cost = cv.pixel(i);
      for (int d = 0; d < m; ++d) {
        energy[d] = -static_cast<double>(cost[d]) - potts[d] - local[d];
      }
      if (!softmax(energy, next.pixel(i))) {
        throw NumericalError("non-finite mean-field update at pixel (" +
                             std::to_string(x) + ", " + std::to_string(y) + ")");
      }
    }
  }
  return next;
}

BeliefVolume run_inference(const CostVolume& cv, const RgbImage& guide,
                           const InferenceConfig& cfg,
                           const IterationObserver& observer) {
  cfg.validate();
  if (!guide.same_size(cv.width(), cv.height())) {
    throw InputError("guide image does not match the cost volume");
  }
  std::unique_ptr<PermutohedralLattice> lattice;
  if (cfg.full.omega != 0.0f) {
    lattice = std::make_unique<PermutohedralLattice>(build_lattice(guide, cfg.feature));
  }
  return run_inference(cv, guide, cfg, lattice.get(), observer);
}

BeliefVolume run_inference(const CostVolume& cv, const RgbImage& guide,
                           const InferenceConfig& cfg, const GaussianFilter* filter,
                           const IterationObserver& observer) {
  cfg.validate();
  if (!guide.same_size(cv.width(), cv.height())) {
    throw InputError("guide image does not match the cost volume");
  }
  const LocalEdgeWeights weights = local_edge_weights(guide, cfg.local);
  BeliefVolume q = init_beliefs(cv);
  for (int it = 1; it <= cfg.iterations; ++it) {
    BeliefVolume next = mf_iteration(q, cv, filter, weights, cfg);
    float change = 0.0f;
    if (cfg.early_exit_tolerance) {
      for (std::size_t k = 0; k < q.data().size(); ++k) {
        change = std::max(change, std::abs(next.data()[k] - q.data()[k]));
      }
    }
    q = std::move(next);
    if (observer) observer(it, q);
    if (cfg.early_exit_tolerance && change < *cfg.early_exit_tolerance) break;
  }
  return q;
}

DisparityMap wta(const BeliefVolume& q) {
  DisparityMap out(q.width(), q.height());
  for (std::size_t i = 0; i < q.pixel_count(); ++i) {
    const auto row = q.pixel(i);
    int best = 0;
    for (int d = 1; d < q.levels(); ++d) {
      if (row[d] > row[best]) best = d;
    }
    out.data()[i] = static_cast<float>(best);
  }
  return out;
}

double mean_entropy(const BeliefVolume& q) {
  double total = 0.0;
  for (float p : q.data()) {
    if (p > 0.0f) total -= p * std::log(static_cast<double>(p));
  }
  return total / static_cast<double>(q.pixel_count());
}

double gibbs_energy(const DisparityMap& labels, const CostVolume& cv,
                    const RgbImage& guide, const InferenceConfig& cfg) {
  const int w = cv.width();
  const int h = cv.height();
  if (!labels.same_size(w, h) || !guide.same_size(w, h)) {
    throw InputError("labeling, guide and cost volume differ in size");
  }
  const std::size_t n = cv.pixel_count();
  if (n > ExactGaussianFilter::kMaxPoints) {
    throw InputError("exact energy limited to " +
                     std::to_string(ExactGaussianFilter::kMaxPoints) + " pixels");
  }
  std::vector<int> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = labels.data()[i];
    if (!is_valid_disparity(v) || v < 0.0f || v > static_cast<float>(cv.levels() - 1)) {
      throw InputError("labeling has an invalid disparity at pixel " + std::to_string(i));
    }
    d[i] = static_cast<int>(std::lround(v));
  }

  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) energy += cv.pixel(i)[d[i]];

  if (cfg.full.omega != 0.0f) {
    const ExactGaussianFilter kernel(bilateral_features(guide, cfg.feature));
    double dense = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (d[i] != d[j]) dense += kernel.kernel(i, j);
      }
    }
    energy += cfg.full.omega * dense;
  }

  if (cfg.local.omega_t != 0.0f) {
    const LocalEdgeWeights weights = local_edge_weights(guide, cfg.local);
    double local = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int di = d[static_cast<std::size_t>(y) * w + x];
        weights.for_each_neighbor(x, y, [&](int nx, int ny, float wt) {
          const int dj = d[static_cast<std::size_t>(ny) * w + nx];
          local += wt * smoothness_multiplier(di, dj, cfg.local.beta);
        });
      }
    }
    energy += cfg.local.omega_t * local;
  }
  return energy;
}

}  // namespace mfstereo
