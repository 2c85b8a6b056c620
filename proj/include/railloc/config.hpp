#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "railloc/kalman.hpp"
#include "railloc/segments.hpp"
#include "railloc/sensors.hpp"

namespace railloc::io {

// Flat TOML-style key = value file: one assignment per line, `#` comments,
// lists as comma-separated tokens.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;               // required
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

// Full scenario: simulation conditions plus filter tuning, wired from one
// config file. Relative paths resolve against the config file's directory.
struct ScenarioConfig {
  std::string track_path;
  sim::RunConfig run;
  filters::FilterTuning tuning;
  filters::ClassifyOptions classify;
  double map_sigma_floor = 0.25;
  double gate_extra_m = 20.0;
  bool closed_loop = false;
};

ScenarioConfig load_scenario(const std::string& path,
                             std::optional<std::uint64_t> seed_override = {});

// Shared list-shaped value parsers ("0:8.0, 500:12.0", "268-281, 392-400",
// "95-175:12").
std::vector<std::pair<double, double>> parse_pair_list(const std::string& text,
                                                       char sep);
std::vector<sim::TimeInterval> parse_intervals(const std::string& text);
std::vector<sim::InflationPhase> parse_inflation(const std::string& text);

}  // namespace railloc::io
