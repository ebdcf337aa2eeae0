#include "mfstereo/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace mfstereo {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kLcm: return "lcm";
    case Mode::kFcm: return "fcm";
    case Mode::kJem: return "jem";
  }
  return "jem";
}

std::string to_string(PostMode mode) {
  switch (mode) {
    case PostMode::kNone: return "none";
    case PostMode::kLrc: return "lrc";
    case PostMode::kLrcFillMedian: return "lrc+of+wmf";
  }
  return "none";
}

Mode parse_mode(std::string_view text) {
  if (text == "lcm") return Mode::kLcm;
  if (text == "fcm") return Mode::kFcm;
  if (text == "jem" || text == "lcm+fcm" || text == "fcm+lcm") return Mode::kJem;
  throw InputError("unknown mode '" + std::string(text) + "' (expected lcm, fcm or jem)");
}

PostMode parse_post_mode(std::string_view text) {
  if (text == "none") return PostMode::kNone;
  if (text == "lrc") return PostMode::kLrc;
  if (text == "lrc+of+wmf" || text == "full") return PostMode::kLrcFillMedian;
  throw InputError("unknown post-processing '" + std::string(text) +
                   "' (expected none, lrc or lrc+of+wmf)");
}

InferenceConfig RunConfig::effective_inference() const {
  InferenceConfig cfg = inference;
  if (mode == Mode::kLcm) cfg.full.omega = 0.0f;
  if (mode == Mode::kFcm) cfg.local.omega_t = 0.0f;
  return cfg;
}

void RunConfig::validate() const {
  cost.validate();
  inference.validate();
  if (scale < 1) throw InputError("scale must be at least 1");
  if (!(lrc_tolerance >= 0.0f)) throw InputError("lrc_tolerance must be non-negative");
  if (wmf_window < 1 || wmf_window % 2 == 0) throw InputError("wmf_window must be odd");
  if (ndisp && *ndisp < 2) throw InputError("ndisp must be at least 2");
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

int to_int(std::string_view key, std::string_view value) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InputError("bad integer for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return v;
}

float to_float(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const float v = std::strtof(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw InputError("bad number for " + std::string(key) + ": '" + s + "'");
  }
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw InputError("bad boolean for " + std::string(key) + ": '" + std::string(value) + "'");
}

/// Shortest text that parses back to the same float.
std::string format_float(float v) {
  char buf[32];
  for (int precision = 6; precision <= 9; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, static_cast<double>(v));
    if (std::strtof(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace

void set_config_value(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  if (key == "census_window") c.cost.census_window = to_int(key, value);
  else if (key == "w_census") c.cost.w_census = to_float(key, value);
  else if (key == "w_grad") c.cost.w_grad = to_float(key, value);
  else if (key == "tau_grad") c.cost.tau_grad = to_float(key, value);
  else if (key == "cost_out_of_view") {
    if (value == "auto") c.cost.cost_out_of_view.reset();
    else c.cost.cost_out_of_view = to_float(key, value);
  }
  else if (key == "iterations") c.inference.iterations = to_int(key, value);
  else if (key == "omega") c.inference.full.omega = to_float(key, value);
  else if (key == "omega_t") c.inference.local.omega_t = to_float(key, value);
  else if (key == "lambda1") c.inference.local.lambda1 = to_float(key, value);
  else if (key == "lambda2") c.inference.local.lambda2 = to_float(key, value);
  else if (key == "lambda3") c.inference.local.lambda3 = to_float(key, value);
  else if (key == "mu1") c.inference.local.mu1 = to_float(key, value);
  else if (key == "mu2") c.inference.local.mu2 = to_float(key, value);
  else if (key == "beta") c.inference.local.beta = to_float(key, value);
  else if (key == "sigma_x") c.inference.feature.sigma_x = to_float(key, value);
  else if (key == "sigma_f") c.inference.feature.sigma_f = to_float(key, value);
  else if (key == "early_exit") {
    if (value == "off") c.inference.early_exit_tolerance.reset();
    else c.inference.early_exit_tolerance = to_float(key, value);
  }
  else if (key == "mode") c.mode = parse_mode(value);
  else if (key == "post") c.post = parse_post_mode(value);
  else if (key == "scale") c.scale = to_int(key, value);
  else if (key == "lrc_tolerance") c.lrc_tolerance = to_float(key, value);
  else if (key == "wmf_window") c.wmf_window = to_int(key, value);
  else if (key == "ndisp") {
    if (value == "auto") c.ndisp.reset();
    else c.ndisp = to_int(key, value);
  }
  else if (key == "out") c.out = value;
  else if (key == "preview") c.preview = value;
  else if (key == "debug_dumps") c.debug_dumps = value;
  else if (key == "debug") {
    // Accepted for symmetry with older files; same as a non-empty debug_dumps.
    if (!to_bool(key, value)) c.debug_dumps.clear();
  }
  else throw InputError("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(number) + ": expected key = value");
    }
    set_config_value(base, trim(std::string_view(stripped).substr(0, eq)),
                     std::string_view(stripped).substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str(), std::move(base));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "# cost\n";
  out << "census_window = " << c.cost.census_window << '\n';
  out << "w_census = " << format_float(c.cost.w_census) << '\n';
  out << "w_grad = " << format_float(c.cost.w_grad) << '\n';
  out << "tau_grad = " << format_float(c.cost.tau_grad) << '\n';
  out << "cost_out_of_view = "
      << (c.cost.cost_out_of_view ? format_float(*c.cost.cost_out_of_view) : "auto") << '\n';
  out << "# inference\n";
  out << "iterations = " << c.inference.iterations << '\n';
  out << "omega = " << format_float(c.inference.full.omega) << '\n';
  out << "omega_t = " << format_float(c.inference.local.omega_t) << '\n';
  out << "lambda1 = " << format_float(c.inference.local.lambda1) << '\n';
  out << "lambda2 = " << format_float(c.inference.local.lambda2) << '\n';
  out << "lambda3 = " << format_float(c.inference.local.lambda3) << '\n';
  out << "mu1 = " << format_float(c.inference.local.mu1) << '\n';
  out << "mu2 = " << format_float(c.inference.local.mu2) << '\n';
  out << "beta = " << format_float(c.inference.local.beta) << '\n';
  out << "sigma_x = " << format_float(c.inference.feature.sigma_x) << '\n';
  out << "sigma_f = " << format_float(c.inference.feature.sigma_f) << '\n';
  out << "early_exit = "
      << (c.inference.early_exit_tolerance ? format_float(*c.inference.early_exit_tolerance)
                                           : "off")
      << '\n';
  out << "# pipeline\n";
  out << "mode = " << to_string(c.mode) << '\n';
  out << "post = " << to_string(c.post) << '\n';
  out << "scale = " << c.scale << '\n';
  out << "lrc_tolerance = " << format_float(c.lrc_tolerance) << '\n';
  out << "wmf_window = " << c.wmf_window << '\n';
  out << "ndisp = " << (c.ndisp ? std::to_string(*c.ndisp) : "auto") << '\n';
  out << "out = " << c.out << '\n';
  out << "preview = " << c.preview << '\n';
  out << "debug_dumps = " << c.debug_dumps << '\n';
  return out.str();
}

}  // namespace mfstereo
