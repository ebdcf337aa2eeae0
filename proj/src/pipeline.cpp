#include "mfstereo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <type_traits>

#include "mfstereo/cost_volume.hpp"
#include "mfstereo/errors.hpp"
#include "mfstereo/evaluation.hpp"
#include "mfstereo/image_io.hpp"
#include "mfstereo/joint_inference.hpp"
#include "mfstereo/post_processing.hpp"

namespace mfstereo {

namespace {

template <typename Fn>
auto run_stage(const std::string& name, std::vector<StageTiming>& timings, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    timings.push_back({name, elapsed.count()});
  };
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
      fn();
      record();
    } else {
      auto result = fn();
      record();
      return result;
    }
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(name + ": " + e.what());
  }
}

std::filesystem::path dump_dir(const RunConfig& config) {
  std::filesystem::path dir = config.debug_dumps;
  std::filesystem::create_directories(dir);
  return dir;
}

void dump_cost_slices(const CostVolume& cv, const std::filesystem::path& dir) {
  for (int d = 0; d < cv.levels(); ++d) {
    char name[32];
    std::snprintf(name, sizeof name, "cost_d%03d.pfm", d);
    write_pfm(cv.slice(d), dir / name);
  }
}

DisparityMap match_view(const CostVolume& cv, const RgbImage& guide, const InferenceConfig& cfg,
                        const std::filesystem::path* trace_path) {
  if (trace_path == nullptr) return wta(run_inference(cv, guide, cfg));
  std::ofstream trace(*trace_path);
  if (!trace) throw InputError(trace_path->string() + ": cannot write trace");
  const bool with_energy = cv.pixel_count() <= ExactGaussianFilter::kMaxPoints;
  trace << "iteration,mean_entropy,energy\n";
  auto log = [&](int iteration, const BeliefVolume& q) {
    trace << iteration << ',' << mean_entropy(q) << ',';
    if (with_energy) trace << gibbs_energy(wta(q), cv, guide, cfg);
    trace << '\n';
  };
  log(0, init_beliefs(cv));
  return wta(run_inference(cv, guide, cfg, log));
}

}  // namespace

InferredPair infer_pair(const RgbImage& left, const RgbImage& right, int ndisp,
                        const RunConfig& config, bool need_right,
                        std::vector<StageTiming>& timings) {
  config.validate();
  if (!left.same_size(right)) {
    throw InputError("left and right images differ in size");
  }
  if (ndisp < 2) throw InputError("ndisp must be at least 2");

  InferredPair out;
  out.scale = config.scale;
  out.full_width = left.width();
  out.full_height = left.height();
  out.levels = effective_levels(ndisp, config.scale);
  const bool dumping = !config.debug_dumps.empty();

  RgbImage right_small;
  run_stage("downsample", timings, [&] {
    out.left_small = downsample(left, config.scale);
    right_small = downsample(right, config.scale);
  });

  const InferenceConfig cfg = config.effective_inference();
  const GrayImage gray_left = to_gray(out.left_small);
  const GrayImage gray_right = to_gray(right_small);

  const CostVolume cost_left = run_stage("cost", timings, [&] {
    return build_cost_volume(gray_left, gray_right, out.levels, config.cost, Reference::kLeft);
  });
  std::filesystem::path trace_path;
  if (dumping) {
    const auto dir = dump_dir(config);
    dump_cost_slices(cost_left, dir);
    trace_path = dir / "trace_left.csv";
  }
  out.left = run_stage("inference", timings, [&] {
    return match_view(cost_left, out.left_small, cfg, dumping ? &trace_path : nullptr);
  });

  if (need_right) {
    // The right view reuses the left-reference path on mirrored images.
    const RgbImage mirrored_right = mirror(right_small);
    const CostVolume cost_right = run_stage("cost_right", timings, [&] {
      return build_cost_volume(to_gray(mirrored_right), to_gray(mirror(out.left_small)),
                               out.levels, config.cost, Reference::kLeft);
    });
    out.right = run_stage("inference_right", timings, [&] {
      return mirror(wta(run_inference(cost_right, mirrored_right, cfg)));
    });
  }
  return out;
}

MatchResult finish_pair(const InferredPair& inferred, PostMode post, const RunConfig& config,
                        std::vector<StageTiming> timings) {
  MatchResult result{inferred, std::nullopt, inferred.left, {}, {}};
  if (post != PostMode::kNone) {
    if (!inferred.right) throw InputError("post: right-view disparities are required");
    run_stage("post", timings, [&] {
      result.mask = lrc_check(inferred.left, *inferred.right, config.lrc_tolerance);
      if (post == PostMode::kLrc) {
        for (std::size_t i = 0; i < result.low_res.pixel_count(); ++i) {
          if (result.mask->data()[i] == 0) result.low_res.data()[i] = kInvalidDisparity;
        }
      } else {
        const DisparityMap filled = occlusion_fill(inferred.left, *result.mask);
        result.low_res = weighted_median(filled, inferred.left_small, *result.mask,
                                         config.wmf_window, config.inference.feature);
      }
    });
    if (!config.debug_dumps.empty()) {
      Grid<std::uint8_t, 1> png(result.mask->width(), result.mask->height());
      for (std::size_t i = 0; i < png.pixel_count(); ++i) {
        png.data()[i] = result.mask->data()[i] != 0 ? 255 : 0;
      }
      write_png(png, dump_dir(config) / "lrc_mask.png");
    }
  }
  result.disparity = run_stage("upsample", timings, [&] {
    return upsample_disparity(result.low_res, inferred.scale, inferred.full_width,
                              inferred.full_height);
  });
  result.timings = std::move(timings);
  return result;
}

MatchResult match_pair(const RgbImage& left, const RgbImage& right, int ndisp,
                       const RunConfig& config) {
  std::vector<StageTiming> timings;
  const InferredPair inferred =
      infer_pair(left, right, ndisp, config, config.post != PostMode::kNone, timings);
  return finish_pair(inferred, config.post, config, std::move(timings));
}

Grid<std::uint8_t, 1> disparity_preview(const DisparityMap& disparity, int ndisp) {
  Grid<std::uint8_t, 1> out(disparity.width(), disparity.height());
  const float scale = ndisp > 1 ? 255.0f / static_cast<float>(ndisp - 1) : 0.0f;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const float d = disparity.data()[i];
    if (!is_valid_disparity(d)) {
      out.data()[i] = 0;
      continue;
    }
    out.data()[i] = static_cast<std::uint8_t>(std::lround(std::clamp(d * scale, 0.0f, 255.0f)));
  }
  return out;
}

std::string format_timings(const std::vector<StageTiming>& timings) {
  std::ostringstream out;
  double total = 0.0;
  char line[96];
  for (const auto& t : timings) {
    std::snprintf(line, sizeof line, "  %-16s %9.3f s\n", t.stage.c_str(), t.seconds);
    out << line;
    total += t.seconds;
  }
  std::snprintf(line, sizeof line, "  %-16s %9.3f s\n", "total", total);
  out << line;
  return out.str();
}

}  // namespace mfstereo
