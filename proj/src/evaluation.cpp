#include "mfstereo/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mfstereo {

EvalResult avg_err(const DisparityMap& pred, const DisparityMap& gt,
                   const ValidityMask* mask, float invalid_penalty) {
  if (!pred.same_size(gt)) {
    throw InputError("prediction is " + std::to_string(pred.width()) + "x" +
                     std::to_string(pred.height()) + " but ground truth is " +
                     std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
  if (mask && !mask->same_size(gt)) {
    throw InputError("evaluation mask does not match the ground truth");
  }
  EvalResult result;
  double total = 0.0;
  std::size_t over1 = 0;
  std::size_t over2 = 0;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    const float g = gt.data()[i];
    if (!std::isfinite(g)) continue;
    if (mask && mask->data()[i] == 0) continue;
    const float p = pred.data()[i];
    const double err = is_valid_disparity(p) ? std::abs(static_cast<double>(p) - g)
                                             : static_cast<double>(invalid_penalty);
    total += err;
    over1 += err > 1.0;
    over2 += err > 2.0;
    ++result.evaluated;
  }
  if (result.evaluated == 0) {
    throw InputError("no pixels to evaluate");
  }
  const auto n = static_cast<double>(result.evaluated);
  result.avg_err = total / n;
  result.bad1 = static_cast<double>(over1) / n;
  result.bad2 = static_cast<double>(over2) / n;
  return result;
}

DisparityMap upsample_disparity(const DisparityMap& pred, int scale,
                                std::optional<int> width, std::optional<int> height) {
  if (scale < 1) throw InputError("upsampling scale must be at least 1");
  const int w = width.value_or(pred.width() * scale);
  const int h = height.value_or(pred.height() * scale);
  DisparityMap out(w, h);
  const auto factor = static_cast<float>(scale);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y / scale, pred.height() - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(x / scale, pred.width() - 1);
      const float v = pred.at(sx, sy);
      out.at(x, y) = is_valid_disparity(v) ? v * factor : kInvalidDisparity;
    }
  }
  return out;
}

DisparityMap downsample_disparity(const DisparityMap& map, int scale) {
  if (scale < 1) throw InputError("downsampling scale must be at least 1");
  const int w = (map.width() + scale - 1) / scale;
  const int h = (map.height() + scale - 1) / scale;
  DisparityMap out(w, h);
  const auto factor = static_cast<float>(scale);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = map.at(x * scale, y * scale);
      out.at(x, y) = is_valid_disparity(v) ? v / factor : kInvalidDisparity;
    }
  }
  return out;
}

double mean_avg_err(std::span<const NamedResult> rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : rows) sum += r.result.avg_err;
  return sum / static_cast<double>(rows.size());
}

namespace {

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

const NamedResult* find_row(const ReportColumn& column, const std::string& name) {
  for (const auto& r : column.rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

}  // namespace

std::string format_report(std::span<const ReportColumn> columns, const std::string& metric) {
  if (columns.empty() || columns.front().rows.empty()) {
    throw InputError("report needs at least one result");
  }
  std::size_t name_width = std::max<std::size_t>(7, metric.size());
  for (const auto& r : columns.front().rows) name_width = std::max(name_width, r.name.size());
  std::vector<std::size_t> col_width;
  for (const auto& c : columns) col_width.push_back(std::max<std::size_t>(8, c.label.size()));

  std::ostringstream out;
  auto pad_left = [&](const std::string& s, std::size_t w) {
    out << std::string(w > s.size() ? w - s.size() : 0, ' ') << s;
  };
  auto pad_right = [&](const std::string& s, std::size_t w) {
    out << s << std::string(w > s.size() ? w - s.size() : 0, ' ');
  };

  pad_right(metric, name_width);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << "  ";
    pad_left(columns[c].label, col_width[c]);
  }
  out << '\n';
  std::size_t rule = name_width;
  for (auto w : col_width) rule += 2 + w;
  out << std::string(rule, '-') << '\n';

  for (const auto& row : columns.front().rows) {
    pad_right(row.name, name_width);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << "  ";
      const NamedResult* r = find_row(columns[c], row.name);
      pad_left(r ? fixed(r->result.avg_err, 2) : "-", col_width[c]);
    }
    out << '\n';
  }
  out << std::string(rule, '-') << '\n';
  pad_right("Avg", name_width);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << "  ";
    pad_left(fixed(mean_avg_err(columns[c].rows), 2), col_width[c]);
  }
  out << '\n';
  return out.str();
}

std::string format_report(std::span<const NamedResult> rows, const std::string& metric) {
  const ReportColumn column{"avgErr", {rows.begin(), rows.end()}};
  return format_report(std::span<const ReportColumn>(&column, 1), metric);
}

std::string format_csv(std::span<const ReportColumn> columns) {
  std::ostringstream out;
  out << "dataset,column,avg_err,bad1,bad2,evaluated,runtime_s\n";
  for (const auto& c : columns) {
    for (const auto& r : c.rows) {
      out << r.name << ',' << c.label << ',' << fixed(r.result.avg_err, 6) << ','
          << fixed(r.result.bad1, 6) << ',' << fixed(r.result.bad2, 6) << ','
          << r.result.evaluated << ',' << fixed(r.result.runtime_s, 4) << '\n';
    }
  }
  return out.str();
}

}  // namespace mfstereo
