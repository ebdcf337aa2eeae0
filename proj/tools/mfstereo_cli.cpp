// Command-line driver: match a stereo pair, evaluate against Middlebury-style
// ground truth, or benchmark the pipeline stages.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfstereo/config.hpp"
#include "mfstereo/errors.hpp"
#include "mfstereo/evaluation.hpp"
#include "mfstereo/image_io.hpp"
#include "mfstereo/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mfstereo;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<int> ndisp;
  std::string mode;
  std::vector<std::string> posts;
  std::optional<int> scale;
  std::optional<int> iters;
  std::string out;
  std::string debug_dumps;
  std::vector<std::string> sets;
};

void add_common_options(CLI::App& cmd, Overrides& o, bool multi_post) {
  cmd.add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd.add_option("--ndisp", o.ndisp, "number of disparity levels at full resolution");
  cmd.add_option("--mode", o.mode, "pairwise terms: lcm, fcm or jem");
  auto* post = cmd.add_option("--post", o.posts, "post-processing: none, lrc or lrc+of+wmf");
  if (!multi_post) post->expected(1);
  cmd.add_option("--scale", o.scale, "downsampling factor before matching");
  cmd.add_option("--iters", o.iters, "mean-field iterations");
  cmd.add_option("--debug-dumps", o.debug_dumps,
                 "directory for cost slices, iteration trace and LRC mask");
  cmd.add_option("--set", o.sets, "extra key=value config overrides");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig config = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.ndisp) config.ndisp = *o.ndisp;
  if (!o.mode.empty()) config.mode = parse_mode(o.mode);
  if (!o.posts.empty()) config.post = parse_post_mode(o.posts.front());
  if (o.scale) config.scale = *o.scale;
  if (o.iters) config.inference.iterations = *o.iters;
  if (!o.out.empty()) config.out = o.out;
  if (!o.debug_dumps.empty()) config.debug_dumps = o.debug_dumps;
  config.validate();
  return config;
}

/// Flag or config value first, then the calib file.
int resolve_ndisp(const RunConfig& config, const std::string& calib_path,
                  const fs::path& fallback_calib) {
  if (config.ndisp) return *config.ndisp;
  if (!calib_path.empty()) return parse_calib(calib_path).ndisp;
  if (fs::exists(fallback_calib)) return parse_calib(fallback_calib).ndisp;
  throw InputError("ndisp is not set: pass --ndisp or provide a calib file with --calib");
}

std::string preview_path(const RunConfig& config) {
  if (!config.preview.empty()) return config.preview;
  return fs::path(config.out).replace_extension(".png").string();
}

int cmd_match(const std::string& left_path, const std::string& right_path,
              const std::string& calib_path, const Overrides& o) {
  const RunConfig config = resolve_config(o);
  const int ndisp = resolve_ndisp(config, calib_path, fs::path(left_path).parent_path() / "calib.txt");
  const RgbImage left = [&] {
    try {
      return read_image(left_path);
    } catch (const InputError& e) {
      throw InputError(std::string("read: ") + e.what());
    }
  }();
  const RgbImage right = [&] {
    try {
      return read_image(right_path);
    } catch (const InputError& e) {
      throw InputError(std::string("read: ") + e.what());
    }
  }();
  const MatchResult result = match_pair(left, right, ndisp, config);
  try {
    write_pfm(result.disparity, config.out);
    write_png(disparity_preview(result.disparity, ndisp), preview_path(config));
  } catch (const InputError& e) {
    throw InputError(std::string("write: ") + e.what());
  }
  std::cout << "wrote " << config.out << " and " << preview_path(config) << '\n';
  std::cout << "stage timings:\n" << format_timings(result.timings);
  return 0;
}

/// A directory is a dataset when it holds both views.
bool is_dataset(const fs::path& dir) {
  return fs::exists(dir / "im0.png") && fs::exists(dir / "im1.png");
}

std::vector<fs::path> find_datasets(const fs::path& root) {
  if (!fs::is_directory(root)) throw InputError(root.string() + ": not a directory");
  if (is_dataset(root)) return {root};
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && is_dataset(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError(root.string() + ": no datasets with im0.png and im1.png");
  return out;
}

int cmd_eval(const std::string& root, const std::string& pred_file, const std::string& csv_path,
             const std::string& out_dir, const Overrides& o) {
  const RunConfig config = resolve_config(o);
  std::vector<PostMode> posts;
  for (const auto& p : o.posts) posts.push_back(parse_post_mode(p));
  if (posts.empty()) posts.push_back(config.post);
  const bool need_right =
      std::any_of(posts.begin(), posts.end(), [](PostMode p) { return p != PostMode::kNone; });

  std::vector<ReportColumn> columns;
  if (pred_file.empty()) {
    for (PostMode p : posts) columns.push_back({to_string(p), {}});
  } else {
    columns.push_back({pred_file, {}});
  }
  int with_mask = 0;
  int without_mask = 0;

  for (const auto& dir : find_datasets(root)) {
    const std::string name = dir.filename().string();
    if (!fs::exists(dir / "disp0GT.pfm")) {
      std::cerr << "warning: " << name << ": missing disp0GT.pfm, skipped\n";
      continue;
    }
    try {
      const DisparityMap gt = read_pfm(dir / "disp0GT.pfm");
      std::optional<ValidityMask> mask;
      if (fs::exists(dir / "mask0nocc.png")) mask = read_mask(dir / "mask0nocc.png");
      const int ndisp = resolve_ndisp(config, "", dir / "calib.txt");
      const auto penalty = static_cast<float>(ndisp);
      const ValidityMask* mask_ptr = mask ? &*mask : nullptr;

      if (!pred_file.empty()) {
        const DisparityMap pred = read_pfm(dir / pred_file);
        columns.front().rows.push_back({name, avg_err(pred, gt, mask_ptr, penalty)});
      } else {
        const auto start = std::chrono::steady_clock::now();
        std::vector<StageTiming> timings;
        const InferredPair inferred = infer_pair(read_image(dir / "im0.png"),
                                                 read_image(dir / "im1.png"), ndisp, config,
                                                 need_right, timings);
        const std::chrono::duration<double> infer_time =
            std::chrono::steady_clock::now() - start;
        for (std::size_t c = 0; c < posts.size(); ++c) {
          const MatchResult result = finish_pair(inferred, posts[c], config, timings);
          EvalResult r = avg_err(result.disparity, gt, mask_ptr, penalty);
          r.runtime_s = infer_time.count();
          for (std::size_t t = timings.size(); t < result.timings.size(); ++t) {
            r.runtime_s += result.timings[t].seconds;
          }
          columns[c].rows.push_back({name, r});
          if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            write_pfm(result.disparity, fs::path(out_dir) / (name + "_" + columns[c].label + ".pfm"));
          }
        }
      }
      (mask ? with_mask : without_mask) += 1;
    } catch (const InputError& e) {
      std::cerr << "warning: " << name << ": " << e.what() << ", skipped\n";
    }
  }
  if (columns.front().rows.empty()) throw InputError("no dataset could be evaluated");

  const std::string coverage = without_mask == 0 ? "nocc" : (with_mask == 0 ? "all" : "nocc/all");
  std::cout << format_report(columns, "avgErr (" + coverage + ")");
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw InputError(csv_path + ": cannot write CSV");
    csv << format_csv(columns);
  }
  return 0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_bench(const std::string& left_path, const std::string& right_path,
              const std::string& calib_path, int repeats, const Overrides& o) {
  if (repeats < 1) throw InputError("--repeats must be at least 1");
  RunConfig config = resolve_config(o);
  config.debug_dumps.clear();
  const int ndisp = resolve_ndisp(config, calib_path, fs::path(left_path).parent_path() / "calib.txt");
  const RgbImage left = read_image(left_path);
  const RgbImage right = read_image(right_path);

  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> samples;
  std::vector<double> totals;
  for (int r = 0; r < repeats; ++r) {
    const MatchResult result = match_pair(left, right, ndisp, config);
    double total = 0.0;
    for (const auto& t : result.timings) {
      if (!samples.contains(t.stage)) order.push_back(t.stage);
      samples[t.stage].push_back(t.seconds);
      total += t.seconds;
    }
    totals.push_back(total);
  }
  std::cout << "median over " << repeats << " run(s), " << left.width() << "x" << left.height()
            << ", ndisp " << ndisp << ", scale " << config.scale << ", mode "
            << to_string(config.mode) << ":\n";
  std::vector<StageTiming> medians;
  for (const auto& stage : order) medians.push_back({stage, median(samples[stage])});
  std::string table = format_timings(medians);
  // The summed medians are not the median total; print the latter.
  table.resize(table.rfind("  total"));
  std::printf("%s  %-16s %9.3f s\n", table.c_str(), "total", median(totals));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense stereo matching by mean-field inference on a joint energy"};
  app.require_subcommand(1);

  Overrides match_opts;
  std::string match_left, match_right, match_calib;
  auto* match = app.add_subcommand("match", "match a stereo pair and write a disparity PFM");
  match->add_option("left", match_left, "left image (PNG or PPM)")->required();
  match->add_option("right", match_right, "right image (PNG or PPM)")->required();
  match->add_option("--calib", match_calib, "calib.txt providing ndisp");
  match->add_option("--out", match_opts.out, "output PFM; the preview PNG is written next to it");
  add_common_options(*match, match_opts, false);

  Overrides eval_opts;
  std::string eval_root, eval_pred, eval_csv, eval_out;
  auto* eval = app.add_subcommand("eval", "evaluate on Middlebury-style dataset folders");
  eval->add_option("datasets", eval_root, "a dataset folder or a folder of datasets")->required();
  eval->add_option("--pred-file", eval_pred,
                   "score an existing PFM in each dataset folder instead of matching");
  eval->add_option("--csv", eval_csv, "also write per-dataset results as CSV");
  eval->add_option("--out", eval_out, "directory for per-dataset prediction PFMs");
  add_common_options(*eval, eval_opts, true);

  Overrides bench_opts;
  std::string bench_left, bench_right, bench_calib;
  int repeats = 3;
  auto* bench = app.add_subcommand("bench", "report median stage timings over repeated runs");
  bench->add_option("left", bench_left, "left image")->required();
  bench->add_option("right", bench_right, "right image")->required();
  bench->add_option("--calib", bench_calib, "calib.txt providing ndisp");
  bench->add_option("--repeats", repeats, "number of runs");
  add_common_options(*bench, bench_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*match) return cmd_match(match_left, match_right, match_calib, match_opts);
    if (*eval) return cmd_eval(eval_root, eval_pred, eval_csv, eval_out, eval_opts);
    if (*bench) return cmd_bench(bench_left, bench_right, bench_calib, repeats, bench_opts);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
