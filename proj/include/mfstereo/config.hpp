#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mfstereo/cost_volume.hpp"
#include "mfstereo/joint_inference.hpp"

namespace mfstereo {

/// Which pairwise terms are active: local only (omega = 0), fully connected
/// only (omega_t = 0), or both.
enum class Mode { kLcm, kFcm, kJem };

/// Post-processing chain after winner-take-all.
enum class PostMode { kNone, kLrc, kLrcFillMedian };

std::string to_string(Mode mode);
std::string to_string(PostMode mode);
Mode parse_mode(std::string_view text);
PostMode parse_post_mode(std::string_view text);

struct RunConfig {
  CostParams cost;
  InferenceConfig inference;
  Mode mode = Mode::kJem;
  PostMode post = PostMode::kLrcFillMedian;
  /// Images are box-downsampled by this factor before matching.
  int scale = 1;
  float lrc_tolerance = 1.0f;
  int wmf_window = 9;
  /// Overrides the calib file when set.
  std::optional<int> ndisp;
  std::string out = "disparity.pfm";
  /// Empty: derived from `out` by replacing the extension with .png.
  std::string preview;
  /// Directory for cost slices, iteration traces and masks; empty disables.
  std::string debug_dumps;

  /// Inference settings with the mode's switched-off term zeroed.
  InferenceConfig effective_inference() const;
  void validate() const;
};

/// Sets one field from its textual key and value. Throws InputError for an
/// unknown key or a malformed value.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` lines; `#` starts a comment. Unset keys keep defaults.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every field in parse_config's format, one per line.
std::string serialize_config(const RunConfig& config);

}  // namespace mfstereo
