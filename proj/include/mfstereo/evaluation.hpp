#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfstereo/image.hpp"

namespace mfstereo {

struct EvalResult {
  double avg_err = 0.0;
  double bad1 = 0.0;  // fraction of evaluated pixels with error > 1
  double bad2 = 0.0;  // fraction with error > 2
  std::size_t evaluated = 0;
  double runtime_s = 0.0;
};

/// Mean absolute error over pixels where `gt` is finite and `mask` (when
/// given) is valid. Prediction pixels holding the invalid marker score
/// `invalid_penalty`. Throws InputError on a size mismatch or when no pixel is
/// evaluated.
EvalResult avg_err(const DisparityMap& pred, const DisparityMap& gt,
                   const ValidityMask* mask, float invalid_penalty);

/// Nearest-neighbor upsampling by `scale` with finite values multiplied by
/// `scale`. When target dimensions are given the result is cropped (or
/// edge-extended) to them.
DisparityMap upsample_disparity(const DisparityMap& pred, int scale,
                                std::optional<int> width = std::nullopt,
                                std::optional<int> height = std::nullopt);

/// Block subsampling of a disparity map: each s x s block keeps its top-left
/// value divided by `scale`. Used to build low-resolution references.
DisparityMap downsample_disparity(const DisparityMap& map, int scale);

struct NamedResult {
  std::string name;
  EvalResult result;
};

/// One column of a report: a label (e.g. a post-processing mode) and a result
/// per dataset.
struct ReportColumn {
  std::string label;
  std::vector<NamedResult> rows;
};

/// Fixed-width table: one row per dataset, one column per ReportColumn, and a
/// trailing Avg row holding the unweighted mean of each column. Datasets are
/// listed in the order of the first column; a dataset missing from a column is
/// printed as "-". `metric` names the measure in the header, e.g.
/// "avgErr (nocc)".
std::string format_report(std::span<const ReportColumn> columns,
                          const std::string& metric = "avgErr");

std::string format_report(std::span<const NamedResult> rows,
                          const std::string& metric = "avgErr");

/// Unweighted mean of avg_err over the rows.
double mean_avg_err(std::span<const NamedResult> rows);

/// Comma-separated dataset,column,avg_err,bad1,bad2,evaluated,runtime_s rows.
std::string format_csv(std::span<const ReportColumn> columns);

}  // namespace mfstereo
