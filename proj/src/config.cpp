#include "railloc/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "railloc/errors.hpp"
#include "railloc/stream_io.hpp"

namespace railloc::io {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config value for '" + what + "' is not a number: '" + s + "'");
  }
}

}  // namespace

KvConfig KvConfig::parse_text(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  return parse_text(read_text_file(path), path);
}

bool KvConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KvConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("missing required config key '" + key + "' in " + origin_);
  }
  return it->second;
}

std::string KvConfig::get_string(const std::string& key,
                                 const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key) const {
  return to_double(get_string(key), key);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(it->second, key);
}

std::uint64_t KvConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config value for '" + key + "' is not an integer: '" +
                      it->second + "'");
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config value for '" + key + "' is not a boolean: '" +
                    it->second + "'");
}

std::vector<std::pair<double, double>> parse_pair_list(const std::string& text,
                                                       char sep) {
  std::vector<std::pair<double, double>> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto p = item.find(sep);
    if (p == std::string::npos) {
      throw ConfigError("expected '<a>" + std::string(1, sep) + "<b>' item, got '" +
                        item + "'");
    }
    out.emplace_back(to_double(trim(item.substr(0, p)), "pair list"),
                     to_double(trim(item.substr(p + 1)), "pair list"));
  }
  return out;
}

std::vector<sim::TimeInterval> parse_intervals(const std::string& text) {
  std::vector<sim::TimeInterval> out;
  for (const auto& [a, b] : parse_pair_list(text, '-')) out.push_back({a, b});
  return out;
}

std::vector<sim::InflationPhase> parse_inflation(const std::string& text) {
  // "t0-t1:scale, ..."
  std::vector<sim::InflationPhase> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const auto dash = item.find('-');
    if (colon == std::string::npos || dash == std::string::npos || dash > colon) {
      throw ConfigError("expected 't0-t1:scale' item, got '" + item + "'");
    }
    sim::InflationPhase p;
    p.t0 = to_double(trim(item.substr(0, dash)), "sigma_inflation");
    p.t1 = to_double(trim(item.substr(dash + 1, colon - dash - 1)), "sigma_inflation");
    p.scale = to_double(trim(item.substr(colon + 1)), "sigma_inflation");
    out.push_back(p);
  }
  return out;
}

ScenarioConfig load_scenario(const std::string& path,
                             std::optional<std::uint64_t> seed_override) {
  const KvConfig kv = KvConfig::parse_file(path);
  ScenarioConfig sc;

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  sc.track_path = resolve(kv.get_string("track"));

  sim::RunConfig& run = sc.run;
  run.speed_profile = parse_pair_list(kv.get_string("speed_profile"), ':');
  run.ramp_length = kv.get_double("speed_ramp_m", run.ramp_length);
  run.gnss_rate_hz = kv.get_double("gnss_rate_hz", run.gnss_rate_hz);
  run.imu_rate_hz = kv.get_double("imu_rate_hz", run.imu_rate_hz);
  run.gnss_sigma_east = kv.get_double("gnss_sigma_east_m", run.gnss_sigma_east);
  run.gnss_sigma_north = kv.get_double("gnss_sigma_north_m", run.gnss_sigma_north);
  run.gnss_speed_sigma = kv.get_double("gnss_speed_sigma_mps", run.gnss_speed_sigma);
  if (kv.has("sigma_inflation")) {
    run.sigma_inflation = parse_inflation(kv.get_string("sigma_inflation"));
  }
  if (kv.has("outages")) run.outages = parse_intervals(kv.get_string("outages"));
  run.gyro_noise_density = kv.get_double("gyro_noise_density", run.gyro_noise_density);
  run.gyro_bias = kv.get_double("gyro_bias", run.gyro_bias);
  run.accel_noise_density = kv.get_double("accel_noise_density", run.accel_noise_density);
  run.accel_bias = kv.get_double("accel_bias", run.accel_bias);
  run.seed = seed_override.value_or(kv.get_uint("seed", 1));
  run.duration_limit_s = kv.get_double("duration_limit_s", 0.0);
  run.speed_sigma_inflation =
      kv.get_double("speed_sigma_inflation", run.speed_sigma_inflation);

  filters::FilterTuning& tun = sc.tuning;
  tun.step_dt = kv.get_double("filter_dt", tun.step_dt);
  tun.gyro_sample_sigma = run.gyro_noise_density * std::sqrt(run.imu_rate_hz);
  tun.gyro_bias_budget = kv.get_double("gyro_bias_budget", 1.25 * run.gyro_bias);
  tun.accel_sample_sigma = run.accel_noise_density * std::sqrt(run.imu_rate_hz);
  tun.accel_bias_budget = kv.get_double("accel_bias_budget", 1.5 * run.accel_bias);
  tun.speed_meas_sigma = kv.get_double("speed_meas_sigma", 1.25 * run.gnss_speed_sigma);
  tun.pseudo_omega_sigma = kv.get_double("pseudo_omega_sigma", tun.pseudo_omega_sigma);
  tun.q_pos = kv.get_double("q_pos", tun.q_pos);
  tun.q_pos_free = kv.get_double("q_pos_free", tun.q_pos_free);
  tun.q_psi = kv.get_double("q_psi", tun.q_psi);
  tun.q_omega_straight = kv.get_double("q_omega_straight", tun.q_omega_straight);
  tun.q_omega_arc = kv.get_double("q_omega_arc", tun.q_omega_arc);
  tun.q_omega_free = kv.get_double("q_omega_free", tun.q_omega_free);
  const double stay = kv.get_double("pi_stay", 0.98);
  if (stay <= 0.0 || stay >= 1.0) throw ConfigError("pi_stay must be in (0, 1)");
  const double off = 1.0 - stay;
  Eigen::Matrix3d pi;
  pi << stay, 0.25 * off, 0.75 * off,
        0.25 * off, stay, 0.75 * off,
        0.5 * off, 0.5 * off, stay;
  tun.transition = pi;

  sc.classify.open_threshold = kv.get_double("hysteresis_open", 0.9);
  sc.classify.close_threshold = kv.get_double("hysteresis_close", 0.5);
  sc.classify.open_epochs =
      static_cast<int>(kv.get_double("hysteresis_epochs", 3));
  sc.map_sigma_floor = kv.get_double("map_sigma_floor", 0.25);
  sc.gate_extra_m = kv.get_double("gate_extra_m", 20.0);
  sc.closed_loop = kv.get_bool("closed_loop", false);
  return sc;
}

}  // namespace railloc::io
