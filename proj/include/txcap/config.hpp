#pragma once

// Flat `key = value` configuration files. One key per line, '#' starts a
// comment, list values are comma separated. Keys are the field names of
// NetworkParams, SimConfig and ExperimentSpec plus the capacity query keys
// `epsilon` and `method`. Anything else is rejected.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "txcap/experiments.hpp"

namespace txcap {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::array<std::string_view, 25> kConfigKeys{
    "lambda",       "d",           "alpha",        "theta",         "beta",
    "L",            "mode",        "region_radius", "trials",       "seed",
    "stream_count", "figure_id",   "lambdas",      "points_per_decade", "L_set",
    "epsilons",     "modes",       "radius_policy", "outage_min",   "outage_max",
    "mc_samples",   "target_events", "max_trials", "output",        "epsilon"};

inline constexpr std::string_view kMethodKey = "method";

inline bool is_config_key(std::string_view key) {
  return key == kMethodKey || std::find(kConfigKeys.begin(), kConfigKeys.end(), key) != kConfigKeys.end();
}

/// Parsed key/value pairs in file order (later duplicates are an error).
struct ConfigMap {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  const std::string& at(const std::string& key) const { return values.at(key); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "': '" + text + "' is not a non-negative integer");
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) items.push_back(t);
  }
  return items;
}

}  // namespace detail

inline ConfigMap parse_config(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(std::string_view(body).substr(0, eq));
    const auto value = detail::trim(std::string_view(body).substr(eq + 1));
    if (!is_config_key(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    if (!cfg.values.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return cfg;
}

inline ConfigMap parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

inline void apply_config(const ConfigMap& cfg, NetworkParams& p) {
  using detail::parse_double;
  if (cfg.has("lambda")) p.lambda = parse_double("lambda", cfg.at("lambda"));
  if (cfg.has("d")) p.d = parse_double("d", cfg.at("d"));
  if (cfg.has("alpha")) p.alpha = parse_double("alpha", cfg.at("alpha"));
  if (cfg.has("theta")) p.theta = parse_double("theta", cfg.at("theta"));
  if (cfg.has("beta")) p.beta = parse_double("beta", cfg.at("beta"));
  if (cfg.has("L")) p.L = static_cast<int>(detail::parse_uint("L", cfg.at("L")));
}

inline void apply_config(const ConfigMap& cfg, SimConfig& s) {
  if (cfg.has("mode")) {
    try {
      s.mode = parse_sim_mode(cfg.at("mode"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (cfg.has("region_radius")) s.region_radius = detail::parse_double("region_radius", cfg.at("region_radius"));
  if (cfg.has("trials")) s.trials = detail::parse_uint("trials", cfg.at("trials"));
  if (cfg.has("seed")) s.seed = detail::parse_uint("seed", cfg.at("seed"));
  if (cfg.has("stream_count")) s.stream_count = detail::parse_uint("stream_count", cfg.at("stream_count"));
}

inline void apply_config(const ConfigMap& cfg, ExperimentSpec& e) {
  apply_config(cfg, e.base);
  apply_config(cfg, e.sim);
  try {
    if (cfg.has("radius_policy")) e.radius_policy = parse_radius_policy(cfg.at("radius_policy"));
    if (cfg.has("modes")) {
      e.modes.clear();
      for (const auto& m : detail::split_list(cfg.at("modes"))) e.modes.push_back(parse_sim_mode(m));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  if (cfg.has("lambdas")) {
    e.lambdas.clear();
    for (const auto& v : detail::split_list(cfg.at("lambdas"))) e.lambdas.push_back(detail::parse_double("lambdas", v));
  }
  if (cfg.has("points_per_decade"))
    e.points_per_decade = detail::parse_double("points_per_decade", cfg.at("points_per_decade"));
  if (cfg.has("L_set")) {
    e.L_set.clear();
    for (const auto& v : detail::split_list(cfg.at("L_set")))
      e.L_set.push_back(static_cast<int>(detail::parse_uint("L_set", v)));
  }
  if (cfg.has("epsilons")) {
    e.epsilons.clear();
    for (const auto& v : detail::split_list(cfg.at("epsilons"))) e.epsilons.push_back(detail::parse_double("epsilons", v));
  }
  if (cfg.has("outage_min")) e.outage_min = detail::parse_double("outage_min", cfg.at("outage_min"));
  if (cfg.has("outage_max")) e.outage_max = detail::parse_double("outage_max", cfg.at("outage_max"));
  if (cfg.has("mc_samples")) e.mc_samples = detail::parse_uint("mc_samples", cfg.at("mc_samples"));
  if (cfg.has("target_events")) e.target_events = detail::parse_uint("target_events", cfg.at("target_events"));
  if (cfg.has("max_trials")) e.max_trials = detail::parse_uint("max_trials", cfg.at("max_trials"));
  if (cfg.has("output")) e.output = cfg.at("output");
}

/// Figure id named in the config, if any.
inline std::optional<FigureId> config_figure_id(const ConfigMap& cfg) {
  if (!cfg.has("figure_id")) return std::nullopt;
  try {
    return parse_figure_id(cfg.at("figure_id"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace txcap
