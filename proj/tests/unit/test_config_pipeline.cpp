#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <sys/wait.h>

#include "mfstereo/config.hpp"
#include "mfstereo/image_io.hpp"
#include "mfstereo/pipeline.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace mfstereo;
using mfstereo::testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

/// Runs the CLI with stderr folded into the captured output.
Run cli(const std::string& args) {
  const std::string cmd = std::string(MFSTEREO_CLI) + " " + args + " 2>&1";
  Run run;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) run.output += buf.data();
  const int status = pclose(pipe);
  run.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return run;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool same_config(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b) && a.cost.census_window == b.cost.census_window &&
         a.cost.w_census == b.cost.w_census && a.cost.w_grad == b.cost.w_grad &&
         a.cost.tau_grad == b.cost.tau_grad && a.cost.cost_out_of_view == b.cost.cost_out_of_view &&
         a.inference.iterations == b.inference.iterations &&
         a.inference.full.omega == b.inference.full.omega &&
         a.inference.local.omega_t == b.inference.local.omega_t &&
         a.inference.local.lambda1 == b.inference.local.lambda1 &&
         a.inference.local.lambda2 == b.inference.local.lambda2 &&
         a.inference.local.lambda3 == b.inference.local.lambda3 &&
         a.inference.local.mu1 == b.inference.local.mu1 &&
         a.inference.local.mu2 == b.inference.local.mu2 &&
         a.inference.local.beta == b.inference.local.beta &&
         a.inference.feature.sigma_x == b.inference.feature.sigma_x &&
         a.inference.feature.sigma_f == b.inference.feature.sigma_f &&
         a.inference.early_exit_tolerance == b.inference.early_exit_tolerance &&
         a.mode == b.mode && a.post == b.post && a.scale == b.scale &&
         a.lrc_tolerance == b.lrc_tolerance && a.wmf_window == b.wmf_window &&
         a.ndisp == b.ndisp && a.out == b.out && a.preview == b.preview &&
         a.debug_dumps == b.debug_dumps;
}

}  // namespace

TEST_CASE("defaults carry the published parameters") {
  const RunConfig c;
  CHECK(c.inference.feature.sigma_x == 5.0f);
  CHECK(c.inference.feature.sigma_f == 55.0f);
  CHECK(c.inference.local.mu1 == 7.0f);
  CHECK(c.inference.local.mu2 == 15.0f);
  CHECK(c.inference.local.lambda1 == 3.5f);
  CHECK(c.inference.local.lambda2 == 3.0f);
  CHECK(c.inference.local.lambda3 == 1.0f);
  CHECK(c.mode == Mode::kJem);
  CHECK(c.post == PostMode::kLrcFillMedian);
}

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(
      "# comment line\n"
      "  omega = 2.5   # trailing comment\n"
      "mode=fcm\n"
      "\n"
      "post = lrc\n"
      "ndisp = 64\n"
      "early_exit = 0.001\n"
      "out = /tmp/x y.pfm\n");
  CHECK(c.inference.full.omega == 2.5f);
  CHECK(c.mode == Mode::kFcm);
  CHECK(c.post == PostMode::kLrc);
  CHECK(c.ndisp == 64);
  CHECK(c.inference.early_exit_tolerance == 0.001f);
  CHECK(c.out == "/tmp/x y.pfm");
  CHECK(c.inference.iterations == RunConfig{}.inference.iterations);

  CHECK_THROWS_WITH_AS(parse_config("bogus = 1\n"), doctest::Contains("bogus"), InputError);
  CHECK_THROWS_AS(parse_config("omega = lots\n"), InputError);
  CHECK_THROWS_AS(parse_config("iterations = 2.5\n"), InputError);
  CHECK_THROWS_AS(parse_config("mode = both\n"), InputError);
  CHECK_THROWS_WITH_AS(parse_config("omega\n"), doctest::Contains("line 1"), InputError);
}

TEST_CASE("config round trip reproduces every value") {
  CHECK(same_config(parse_config(serialize_config(RunConfig{})), RunConfig{}));
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> real(0.01f, 10.0f);
  for (int trial = 0; trial < 50; ++trial) {
    RunConfig c;
    c.cost.census_window = 3 + 2 * static_cast<int>(rng() % 3);
    c.cost.w_census = real(rng);
    c.cost.w_grad = real(rng);
    c.cost.tau_grad = real(rng);
    if (trial % 2) c.cost.cost_out_of_view = real(rng);
    c.inference.iterations = 1 + static_cast<int>(rng() % 9);
    c.inference.full.omega = real(rng);
    c.inference.local.omega_t = real(rng);
    c.inference.local.beta = real(rng) / 10.0f;
    c.inference.feature.sigma_x = real(rng);
    c.inference.feature.sigma_f = real(rng) * 10.0f;
    if (trial % 3 == 0) c.inference.early_exit_tolerance = real(rng) / 1000.0f;
    c.mode = static_cast<Mode>(trial % 3);
    c.post = static_cast<PostMode>((trial / 3) % 3);
    c.scale = 1 + trial % 4;
    c.lrc_tolerance = real(rng);
    c.wmf_window = 1 + 2 * (trial % 6);
    if (trial % 4 == 0) c.ndisp = 2 + trial;
    c.out = "out_" + std::to_string(trial) + ".pfm";
    c.preview = trial % 2 ? "p.png" : "";
    c.debug_dumps = trial % 5 == 0 ? "dumps" : "";
    CHECK(same_config(parse_config(serialize_config(c)), c));
  }
}

TEST_CASE("modes switch off one pairwise term") {
  RunConfig c;
  c.inference.full.omega = 2.0f;
  c.inference.local.omega_t = 3.0f;
  c.mode = Mode::kLcm;
  CHECK(c.effective_inference().full.omega == 0.0f);
  CHECK(c.effective_inference().local.omega_t == 3.0f);
  c.mode = Mode::kFcm;
  CHECK(c.effective_inference().full.omega == 2.0f);
  CHECK(c.effective_inference().local.omega_t == 0.0f);
  c.mode = Mode::kJem;
  CHECK(c.effective_inference().full.omega == 2.0f);
  CHECK(c.effective_inference().local.omega_t == 3.0f);
}

TEST_CASE("pipeline recovers a shifted pair") {
  const auto scene = testing::make_shifted_pair(96, 64, 4, 12, 3);
  const MatchResult r = match_pair(scene.left, scene.right, scene.ndisp, RunConfig{});
  CHECK(testing::fraction_within(r.disparity, scene, 1.0f) >= 0.9);
  for (float v : r.disparity.data()) CHECK(is_valid_disparity(v));
  std::vector<std::string> stages;
  for (const auto& t : r.timings) stages.push_back(t.stage);
  CHECK(stages == std::vector<std::string>{"downsample", "cost", "inference", "cost_right",
                                           "inference_right", "post", "upsample"});
}

TEST_CASE("pipeline at reduced scale returns full-resolution disparities") {
  testing::SceneSpec spec;
  spec.width = 130;
  spec.height = 70;
  spec.ndisp = 32;
  spec.levels = {4, 12, 20};
  const auto scene = testing::make_scene(spec);
  RunConfig c;
  c.scale = 2;
  const MatchResult r = match_pair(scene.left, scene.right, scene.ndisp, c);
  CHECK(r.inferred.levels == 16);
  CHECK(r.low_res.width() == 65);
  CHECK(r.disparity.width() == 130);
  CHECK(r.disparity.height() == 70);
  CHECK(testing::fraction_within(r.disparity, scene, 2.0f) >= 0.8);
}

TEST_CASE("LRC-only post-processing marks inconsistent pixels invalid") {
  const auto scene = testing::make_scene({});
  RunConfig c;
  c.post = PostMode::kLrc;
  const MatchResult r = match_pair(scene.left, scene.right, scene.ndisp, c);
  REQUIRE(r.mask.has_value());
  for (std::size_t i = 0; i < r.low_res.pixel_count(); ++i) {
    CHECK(is_valid_disparity(r.low_res.data()[i]) == (r.mask->data()[i] != 0));
  }
  c.post = PostMode::kNone;
  const MatchResult raw = match_pair(scene.left, scene.right, scene.ndisp, c);
  CHECK(!raw.mask.has_value());
  CHECK(!raw.inferred.right.has_value());
}

TEST_CASE("identical runs give identical output bytes") {
  TempDir dir;
  const auto scene = testing::make_scene({});
  const RunConfig c;
  write_pfm(match_pair(scene.left, scene.right, scene.ndisp, c).disparity, dir / "a.pfm");
  write_pfm(match_pair(scene.left, scene.right, scene.ndisp, c).disparity, dir / "b.pfm");
  CHECK(slurp(dir / "a.pfm") == slurp(dir / "b.pfm"));
}

TEST_CASE("joint model keeps at least as many thin-bar pixels as the dense model alone") {
  for (const auto& spec : testing::scene_suite()) {
    if (!spec.thin_bars) continue;
    const auto scene = testing::make_scene(spec);
    auto thin_hits = [&](Mode mode) {
      RunConfig c;
      c.mode = mode;
      const DisparityMap d = match_pair(scene.left, scene.right, scene.ndisp, c).disparity;
      std::size_t hits = 0;
      for (std::size_t i = 0; i < d.pixel_count(); ++i) {
        hits += scene.thin.data()[i] && std::abs(d.data()[i] - scene.gt.data()[i]) <= 1.0f;
      }
      return hits;
    };
    CHECK(thin_hits(Mode::kJem) >= thin_hits(Mode::kFcm));
  }
}

TEST_CASE("debug dumps") {
  TempDir dir;
  testing::SceneSpec spec;
  spec.width = 48;
  spec.height = 40;
  spec.ndisp = 8;
  spec.levels = {1, 3, 5};
  const auto scene = testing::make_scene(spec);
  RunConfig c;
  c.debug_dumps = (dir / "dumps").string();
  match_pair(scene.left, scene.right, scene.ndisp, c);
  CHECK(std::filesystem::exists(dir / "dumps/cost_d000.pfm"));
  CHECK(std::filesystem::exists(dir / "dumps/cost_d007.pfm"));
  CHECK(std::filesystem::exists(dir / "dumps/lrc_mask.png"));
  const std::string trace = slurp(dir / "dumps/trace_left.csv");
  int lines = 0;
  for (char ch : trace) lines += ch == '\n';
  CHECK(lines == 1 + 1 + c.inference.iterations);
  CHECK(trace.rfind("iteration,mean_entropy,energy", 0) == 0);
  CHECK(trace.find(",\n") == std::string::npos);
}

TEST_CASE("stage failures carry the stage name") {
  const auto scene = testing::make_shifted_pair(32, 32, 2, 8, 5);
  RunConfig c;
  c.inference.local.omega_t = 3e38f;
  CHECK_THROWS_WITH_AS(match_pair(scene.left, scene.right, 8, c),
                       doctest::Contains("inference: "), NumericalError);
  CHECK_THROWS_AS(match_pair(scene.left, RgbImage(31, 32), 8, RunConfig{}), InputError);
}

TEST_CASE("preview mapping") {
  DisparityMap d(4, 1);
  d.data() = {0.0f, 15.0f, 7.5f, kInvalidDisparity};
  const auto p = disparity_preview(d, 16);
  CHECK(p.data() == std::vector<std::uint8_t>{0, 255, 128, 0});
}

TEST_CASE("CLI match") {
  TempDir dir;
  testing::SceneSpec spec;
  spec.width = 64;
  spec.height = 48;
  spec.ndisp = 12;
  spec.levels = {2, 6};
  const auto scene = testing::make_scene(spec);
  write_png(scene.left, dir / "l.png");
  write_png(scene.right, dir / "r.png");

  Run r = cli("match " + (dir / "l.png").string() + " " + (dir / "r.png").string() + " --out " +
              (dir / "d.pfm").string());
  CHECK(r.code == 1);
  CHECK(r.output.find("ndisp") != std::string::npos);

  r = cli("match " + (dir / "l.png").string() + " " + (dir / "r.png").string() +
          " --ndisp 12 --mode jem --post lrc+of+wmf --iters 3 --out " + (dir / "d.pfm").string());
  CHECK(r.code == 0);
  CHECK(r.output.find("inference") != std::string::npos);
  CHECK(read_pfm(dir / "d.pfm").same_size(scene.left));
  CHECK(read_image(dir / "d.png").same_size(scene.left));

  std::ofstream(dir / "calib.txt") << "ndisp=12\n";
  std::ofstream(dir / "run.cfg") << "mode = lcm\npost = none\n";
  r = cli("match " + (dir / "l.png").string() + " " + (dir / "r.png").string() + " --calib " +
          (dir / "calib.txt").string() + " --config " + (dir / "run.cfg").string() + " --out " +
          (dir / "e.pfm").string());
  CHECK(r.code == 0);

  r = cli("match " + (dir / "missing.png").string() + " " + (dir / "r.png").string() +
          " --ndisp 12 --out " + (dir / "x.pfm").string());
  CHECK(r.code == 1);
  CHECK(r.output.find("missing.png") != std::string::npos);

  r = cli("match " + (dir / "l.png").string() + " " + (dir / "r.png").string() +
          " --ndisp 12 --set omega_t=3e38 --out " + (dir / "x.pfm").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("inference") != std::string::npos);

  r = cli("match " + (dir / "l.png").string() + " " + (dir / "r.png").string() +
          " --ndisp 12 --mode sideways");
  CHECK(r.code == 1);
}

TEST_CASE("CLI eval and bench") {
  TempDir dir;
  testing::SceneSpec spec;
  spec.width = 64;
  spec.height = 48;
  spec.ndisp = 12;
  spec.levels = {2, 6};
  testing::write_dataset(testing::make_scene(spec), dir / "sets/alpha");
  spec.seed = 2;
  testing::write_dataset(testing::make_scene(spec), dir / "sets/beta");
  std::filesystem::create_directories(dir / "sets/nogt");
  std::filesystem::copy(dir / "sets/alpha/im0.png", dir / "sets/nogt/im0.png");
  std::filesystem::copy(dir / "sets/alpha/im1.png", dir / "sets/nogt/im1.png");

  Run r = cli("eval " + (dir / "sets").string() + " --pred-file disp0GT.pfm");
  CHECK(r.code == 0);
  CHECK(r.output.find("avgErr (nocc)") != std::string::npos);
  CHECK(r.output.find("nogt") != std::string::npos);  // skip warning
  CHECK(r.output.find("0.00") != std::string::npos);

  r = cli("eval " + (dir / "sets").string() + " --post lrc --post lrc+of+wmf --csv " +
          (dir / "r.csv").string() + " --out " + (dir / "preds").string());
  CHECK(r.code == 0);
  CHECK(r.output.find("lrc+of+wmf") != std::string::npos);
  CHECK(r.output.find("alpha") != std::string::npos);
  CHECK(r.output.find("beta") != std::string::npos);
  CHECK(slurp(dir / "r.csv").find("beta,lrc,") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "preds/alpha_lrc.pfm"));

  std::filesystem::remove(dir / "sets/beta/mask0nocc.png");
  std::filesystem::remove_all(dir / "sets/alpha");
  r = cli("eval " + (dir / "sets").string() + " --pred-file disp0GT.pfm");
  CHECK(r.output.find("avgErr (all)") != std::string::npos);

  const std::string pair = (dir / "sets/beta/im0.png").string() + " " +
                           (dir / "sets/beta/im1.png").string();
  r = cli("bench " + pair + " --repeats 3 --post none");
  CHECK(r.code == 0);
  CHECK(r.output.find("median over 3 run(s)") != std::string::npos);
  r = cli("bench " + pair + " --repeats 0");
  CHECK(r.code == 1);
}
