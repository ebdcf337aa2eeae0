#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfstereo/config.hpp"
#include "mfstereo/image.hpp"

namespace mfstereo {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Winner-take-all disparities of a pair at matching resolution.
struct InferredPair {
  RgbImage left_small;
  DisparityMap left;
  /// Present when the post-processing needs the right view.
  std::optional<DisparityMap> right;
  int levels = 0;
  int scale = 1;
  int full_width = 0;
  int full_height = 0;
};

struct MatchResult {
  InferredPair inferred;
  /// LRC mask at matching resolution; empty for PostMode::kNone.
  std::optional<ValidityMask> mask;
  DisparityMap low_res;
  /// Full-resolution disparities in full-resolution pixel units.
  DisparityMap disparity;
  std::vector<StageTiming> timings;
};

/// Downsample, build cost volumes, run inference and WTA. The right view is
/// matched too when `need_right` is set. Stage timings are appended to
/// `timings`. Errors are rethrown with the stage name prefixed.
InferredPair infer_pair(const RgbImage& left, const RgbImage& right, int ndisp,
                        const RunConfig& config, bool need_right,
                        std::vector<StageTiming>& timings);

/// Applies `post` to an inferred pair and upsamples to full resolution.
MatchResult finish_pair(const InferredPair& inferred, PostMode post, const RunConfig& config,
                        std::vector<StageTiming> timings = {});

/// infer_pair followed by finish_pair with config.post.
MatchResult match_pair(const RgbImage& left, const RgbImage& right, int ndisp,
                       const RunConfig& config);

/// Display mapping d / (ndisp - 1) * 255, clamped; invalid pixels are black.
Grid<std::uint8_t, 1> disparity_preview(const DisparityMap& disparity, int ndisp);

std::string format_timings(const std::vector<StageTiming>& timings);

}  // namespace mfstereo
