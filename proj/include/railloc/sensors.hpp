#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "railloc/geo.hpp"
#include "railloc/geometry.hpp"

namespace railloc::sim {

// GNSS PVT record. Covariance is east/north in m^2; sigma3_max is the
// 3-sigma bound along the covariance ellipse's major axis.
struct GnssFix {
  double t = 0.0;
  geom::GeoPoint position;
  double speed = 0.0;  // m/s, >= 0
  double cov_ee = 0.0;
  double cov_en = 0.0;
  double cov_nn = 0.0;
  double sigma3_max = 0.0;
  bool valid = true;
};

struct ImuSample {
  double t = 0.0;
  double accel[3] = {0.0, 0.0, 0.0};  // m/s^2, body: forward, left, up
  double gyro[3] = {0.0, 0.0, 0.0};   // rad/s, z = yaw rate
};

struct TruthSample {
  double t = 0.0;
  geom::Pose2 pose;
  double speed = 0.0;     // m/s
  double yaw_rate = 0.0;  // rad/s, = speed * curvature exactly
  double arclength = 0.0; // m from chain start
  double accel = 0.0;     // m/s^2, forward
};

struct TimeInterval {
  double t0 = 0.0;
  double t1 = 0.0;
};

struct InflationPhase {
  double t0 = 0.0;
  double t1 = 0.0;
  double scale = 1.0;  // multiplies the base sigma
};

// Simulation configuration mirroring the recorded-drive conditions:
// 1 Hz GNSS / 500 Hz IMU, sigma-inflation phases, outage windows, constant
// per-run IMU biases.
struct RunConfig {
  // Piecewise-constant speed levels over arclength; the final pair marks the
  // end of the profile domain and must reach the track length. Level changes
  // are ramped over ramp_length meters to keep the forward acceleration
  // finite.
  std::vector<std::pair<double, double>> speed_profile;  // (s [m], v [m/s])
  double ramp_length = 60.0;

  double gnss_rate_hz = 1.0;
  double imu_rate_hz = 500.0;

  double gnss_sigma_east = 1.2;   // m, base
  double gnss_sigma_north = 1.2;  // m, base
  double gnss_speed_sigma = 0.08; // m/s
  std::vector<InflationPhase> sigma_inflation;
  std::vector<TimeInterval> outages;

  double gyro_noise_density = 1.0e-4;   // rad/s/sqrt(Hz)
  double gyro_bias = 8.0e-4;            // rad/s, constant per run
  double accel_noise_density = 1.5e-3;  // m/s^2/sqrt(Hz)
  double accel_bias = 1.2e-2;           // m/s^2, constant per run

  std::uint64_t seed = 1;
  double duration_limit_s = 0.0;  // 0 = run to track end

  // m/s speed value applied while inside an inflation phase to the GNSS
  // speed sigma as well (1.0 = position-only degradation).
  double speed_sigma_inflation = 1.0;
};

void validate_config(const RunConfig& cfg, double track_length);

// Speed (and its arclength derivative) from the ramped profile.
double profile_speed(const RunConfig& cfg, double s);
double profile_speed_slope(const RunConfig& cfg, double s);

double inflation_scale(const RunConfig& cfg, double t);
bool in_outage(const RunConfig& cfg, double t);

struct SimResult {
  std::vector<TruthSample> truth;
  std::vector<GnssFix> gnss;
  std::vector<ImuSample> imu;
  geom::GeoPoint plane_origin;  // all local coordinates refer to this plane
};

}  // namespace railloc::sim
