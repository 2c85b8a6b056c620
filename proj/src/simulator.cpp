#include "railloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "railloc/errors.hpp"

namespace railloc::sim {

using geom::Pose2;
using geom::Shape;
using geom::TrackElement;

namespace {

void check_intervals_sorted(const std::vector<TimeInterval>& xs, const char* what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i].t1 > xs[i].t0)) {
      throw DomainError(std::string(what) + ": empty or inverted interval");
    }
    if (i > 0 && xs[i].t0 < xs[i - 1].t1) {
      throw DomainError(std::string(what) + ": overlapping intervals");
    }
  }
}

}  // namespace

void validate_config(const RunConfig& cfg, double track_length) {
  if (cfg.gnss_rate_hz <= 0.0 || cfg.imu_rate_hz <= 0.0) {
    throw DomainError("sensor rates must be > 0");
  }
  const double ratio = cfg.imu_rate_hz / cfg.gnss_rate_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw DomainError("imu rate must be an integer multiple of the gnss rate");
  }
  if (cfg.gnss_sigma_east <= 0.0 || cfg.gnss_sigma_north <= 0.0 ||
      cfg.gnss_speed_sigma <= 0.0) {
    throw DomainError("gnss sigmas must be > 0");
  }
  if (cfg.gyro_noise_density < 0.0 || cfg.accel_noise_density < 0.0) {
    throw DomainError("noise densities must be >= 0");
  }
  if (cfg.speed_profile.empty()) {
    throw DomainError("speed profile is empty");
  }
  if (cfg.speed_profile.front().first != 0.0) {
    throw DomainError("speed profile must start at s = 0");
  }
  for (std::size_t i = 0; i < cfg.speed_profile.size(); ++i) {
    const auto& [s, v] = cfg.speed_profile[i];
    if (v <= 0.1) throw DomainError("speed profile values must exceed 0.1 m/s");
    if (i > 0 && s <= cfg.speed_profile[i - 1].first) {
      throw DomainError("speed profile breakpoints must increase");
    }
  }
  if (cfg.speed_profile.back().first < track_length) {
    throw DomainError("speed profile shorter than track (" +
                      std::to_string(cfg.speed_profile.back().first) + " < " +
                      std::to_string(track_length) + " m)");
  }
  check_intervals_sorted(cfg.outages, "outages");
  std::vector<TimeInterval> phases;
  for (const auto& p : cfg.sigma_inflation) {
    if (p.scale <= 0.0) throw DomainError("sigma inflation scale must be > 0");
    phases.push_back({p.t0, p.t1});
  }
  check_intervals_sorted(phases, "sigma inflation");
  if (cfg.ramp_length < 0.0) throw DomainError("ramp length must be >= 0");
}

double profile_speed(const RunConfig& cfg, double s) {
  const auto& pr = cfg.speed_profile;
  double v = pr.front().second;
  for (std::size_t i = 1; i < pr.size(); ++i) {
    const double sb = pr[i].first;
    if (s < sb) break;
    const double ramp = std::min(cfg.ramp_length,
                                 (i + 1 < pr.size() ? pr[i + 1].first : 1e300) - sb);
    if (ramp > 0.0 && s < sb + ramp) {
      v += (pr[i].second - v) * (s - sb) / ramp;
      return v;
    }
    v = pr[i].second;
  }
  return v;
}

double profile_speed_slope(const RunConfig& cfg, double s) {
  const auto& pr = cfg.speed_profile;
  double v = pr.front().second;
  for (std::size_t i = 1; i < pr.size(); ++i) {
    const double sb = pr[i].first;
    if (s < sb) break;
    const double ramp = std::min(cfg.ramp_length,
                                 (i + 1 < pr.size() ? pr[i + 1].first : 1e300) - sb);
    if (ramp > 0.0 && s < sb + ramp) {
      return (pr[i].second - v) / ramp;
    }
    v = pr[i].second;
  }
  return 0.0;
}

double inflation_scale(const RunConfig& cfg, double t) {
  for (const auto& p : cfg.sigma_inflation) {
    if (t >= p.t0 && t < p.t1) return p.scale;
  }
  return 1.0;
}

bool in_outage(const RunConfig& cfg, double t) {
  for (const auto& o : cfg.outages) {
    if (t >= o.t0 && t < o.t1) return true;
  }
  return false;
}

maps::TrackMap build_track(const std::vector<TrackSpecElement>& spec,
                           const geom::GeoPoint& origin, double heading_deg) {
  if (spec.empty()) throw DomainError("build_track: empty element spec");

  auto boundary_kappa = [](const TrackSpecElement& e) -> double {
    if (e.shape == Shape::kCircularArc) {
      if (!e.radius || *e.radius == 0.0 || !std::isfinite(*e.radius)) {
        throw DomainError("build_track: circular arc needs a finite nonzero radius");
      }
      return 1.0 / *e.radius;
    }
    return 0.0;
  };

  std::vector<TrackElement> elements;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& e = spec[i];
    if (e.length <= 0.0) {
      throw DomainError("build_track: element " + std::to_string(i + 1) +
                        " has non-positive length");
    }
    TrackElement out;
    out.shape = e.shape;
    out.length = e.length;
    if (e.shape == Shape::kStraight) {
      out.kappa0 = out.kappa1 = 0.0;
    } else if (e.shape == Shape::kCircularArc) {
      out.kappa0 = out.kappa1 = boundary_kappa(e);
    } else {
      if (i > 0 && spec[i - 1].shape == Shape::kTransitionalArc) {
        throw DomainError("build_track: consecutive transitional arcs");
      }
      out.kappa0 = (i > 0) ? boundary_kappa(spec[i - 1]) : 0.0;
      out.kappa1 = (i + 1 < spec.size()) ? boundary_kappa(spec[i + 1]) : 0.0;
      if (e.radius) {
        const double sel = (out.kappa1 != 0.0) ? out.kappa1 : out.kappa0;
        if (sel == 0.0 ||
            std::abs(1.0 / sel - *e.radius) > std::max(0.0011, std::abs(*e.radius) * 1e-6)) {
          throw DomainError("build_track: transitional arc " + std::to_string(i + 1) +
                            " radius mismatches its neighbors");
        }
      }
    }
    elements.push_back(out);
  }

  maps::TrackMap map;
  map.p0 = origin;
  map.start_heading_deg = heading_deg;
  map.elements = std::move(elements);
  maps::check_map_invariants(map);
  return map;
}

SimResult simulate_run(const maps::TrackMap& map, const RunConfig& cfg) {
  maps::check_map_invariants(map);
  const geom::ElementChain chain = maps::chain_in_plane(map, map.p0);
  const double total = chain.total_length();
  validate_config(cfg, total);

  std::mt19937_64 imu_rng(cfg.seed);
  std::mt19937_64 gnss_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double dt = 1.0 / cfg.imu_rate_hz;
  const long gnss_every = std::lround(cfg.imu_rate_hz / cfg.gnss_rate_hz);
  const double gyro_sigma = cfg.gyro_noise_density * std::sqrt(cfg.imu_rate_hz);
  const double accel_sigma = cfg.accel_noise_density * std::sqrt(cfg.imu_rate_hz);

  SimResult out;
  out.plane_origin = map.p0;
  const std::size_t reserve = static_cast<std::size_t>(
      std::min(total / 0.02, 5.0e7));  // rough upper bound on sample count
  out.truth.reserve(reserve);
  out.imu.reserve(reserve);

  double s = 0.0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) / cfg.imu_rate_hz;
    if (cfg.duration_limit_s > 0.0 && t > cfg.duration_limit_s) break;
    if (s >= total) break;

    const Pose2 pose = chain.pose_at(s);
    const double v = profile_speed(cfg, s);
    const double accel = profile_speed_slope(cfg, s) * v;  // dv/dt = dv/ds * v

    TruthSample truth;
    truth.t = t;
    truth.pose = pose;
    truth.speed = v;
    truth.yaw_rate = v * pose.curvature;
    truth.arclength = s;
    truth.accel = accel;
    out.truth.push_back(truth);

    ImuSample imu;
    imu.t = t;
    imu.gyro[0] = gyro_sigma * gauss(imu_rng);
    imu.gyro[1] = gyro_sigma * gauss(imu_rng);
    imu.gyro[2] = truth.yaw_rate + cfg.gyro_bias + gyro_sigma * gauss(imu_rng);
    imu.accel[0] = accel + cfg.accel_bias + accel_sigma * gauss(imu_rng);
    imu.accel[1] = v * v * pose.curvature + accel_sigma * gauss(imu_rng);
    imu.accel[2] = 9.80665 + accel_sigma * gauss(imu_rng);
    out.imu.push_back(imu);

    if (k % gnss_every == 0 && !in_outage(cfg, t)) {
      const double scale = inflation_scale(cfg, t);
      const double se = cfg.gnss_sigma_east * scale;
      const double sn = cfg.gnss_sigma_north * scale;
      GnssFix fix;
      fix.t = t;
      const double ex = se * gauss(gnss_rng);
      const double en = sn * gauss(gnss_rng);
      fix.position = geom::local_to_geo({pose.x + ex, pose.y + en}, map.p0);
      const double sv =
          cfg.gnss_speed_sigma * (scale > 1.0 ? cfg.speed_sigma_inflation : 1.0);
      fix.speed = std::max(0.0, v + sv * gauss(gnss_rng));
      fix.cov_ee = se * se;
      fix.cov_en = 0.0;
      fix.cov_nn = sn * sn;
      fix.sigma3_max = 3.0 * std::max(se, sn);
      fix.valid = true;
      out.gnss.push_back(fix);
    }

    s += v * dt;
  }

  if (out.truth.empty()) {
    throw DomainError("simulate_run produced no samples");
  }
  return out;
}

}  // namespace railloc::sim
