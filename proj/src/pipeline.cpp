#include "railloc/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "railloc/errors.hpp"
#include "railloc/imm.hpp"

namespace railloc::pipeline {

using filters::ImuBatch;
using filters::KinematicState;
using filters::kOmega;
using filters::kPsi;
using filters::kV;
using filters::kX;
using filters::kY;

Method method_from_string(const std::string& name) {
  if (name == "gnss") return Method::kGnss;
  if (name == "kf") return Method::kKf;
  if (name == "imm") return Method::kImm;
  throw ConfigError("unknown method '" + name + "' (expected gnss|kf|imm)");
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kGnss: return "gnss";
    case Method::kKf: return "kf";
    case Method::kImm: return "imm";
  }
  return "?";
}

namespace {

struct LocalFix {
  double t;
  filters::GnssMeas meas;
};

double estimate_epoch_dt(const std::vector<LocalFix>& fixes) {
  std::vector<double> diffs;
  for (std::size_t i = 1; i < fixes.size(); ++i) {
    diffs.push_back(fixes[i].t - fixes[i - 1].t);
  }
  std::sort(diffs.begin(), diffs.end());
  return diffs[diffs.size() / 2];  // median rides over outage gaps
}

void fill_state_columns(io::StateLogRow& row, const KinematicState& st) {
  row.x = st.x();
  row.y = st.y();
  row.v = st.speed();
  row.psi = st.heading();
  row.omega = st.yaw_rate();
  for (int i = 0; i < 5; ++i) row.p_diag[i] = st.cov(i, i);
  row.cov_xy = st.cov(kX, kY);
  const double ct = std::cos(row.psi), stn = std::sin(row.psi);
  const double va = ct * (st.cov(kX, kX) * ct + st.cov(kX, kY) * stn) +
                    stn * (st.cov(kX, kY) * ct + st.cov(kY, kY) * stn);
  const double vc = stn * (st.cov(kX, kX) * stn - st.cov(kX, kY) * ct) -
                    ct * (st.cov(kX, kY) * stn - st.cov(kY, kY) * ct);
  row.sigma3_along = 3.0 * std::sqrt(std::max(va, 0.0));
  row.sigma3_cross = 3.0 * std::sqrt(std::max(vc, 0.0));
}

void apply_fused_columns(io::StateLogRow& row, const fuse::FusedPosition& fp) {
  row.has_fused = true;
  row.fused_x = fp.x;
  row.fused_y = fp.y;
  row.fused_cov_xx = fp.cov_xx;
  row.fused_cov_xy = fp.cov_xy;
  row.fused_cov_yy = fp.cov_yy;
  row.fused_s = fp.along_track_s;
  row.map_constrained = fp.map_constrained;
}

// Closed-loop option: push the fused position back into a state.
void inject_position(KinematicState& st, const fuse::FusedPosition& fp) {
  st.mean(kX) = fp.x;
  st.mean(kY) = fp.y;
  st.cov(kX, kX) = fp.cov_xx;
  st.cov(kX, kY) = st.cov(kY, kX) = fp.cov_xy;
  st.cov(kY, kY) = fp.cov_yy;
  filters::enforce_psd(st.cov);
}

}  // namespace

std::vector<io::StateLogRow> localize(Method method,
                                      const std::vector<sim::GnssFix>& gnss,
                                      const std::vector<sim::ImuSample>& imu,
                                      const geom::GeoPoint& origin,
                                      const LocalizeOptions& opts) {
  std::vector<LocalFix> fixes;
  fixes.reserve(gnss.size());
  for (const auto& f : gnss) {
    if (!f.valid) continue;
    const geom::LocalXY xy = geom::geo_to_local(f.position, origin);
    LocalFix lf;
    lf.t = f.t;
    lf.meas.x = xy.x;
    lf.meas.y = xy.y;
    lf.meas.speed = f.speed;
    lf.meas.cov_xx = f.cov_ee;
    lf.meas.cov_xy = f.cov_en;
    lf.meas.cov_yy = f.cov_nn;
    double speed_scale = 1.0;
    if (opts.gnss_base_sigma > 0.0) {
      const double ratio2 = std::max(f.cov_ee, f.cov_nn) /
                            (opts.gnss_base_sigma * opts.gnss_base_sigma);
      speed_scale = std::max(1.0, ratio2);
    }
    lf.meas.speed_var =
        opts.tuning.speed_meas_sigma * opts.tuning.speed_meas_sigma * speed_scale;
    fixes.push_back(lf);
  }
  if (fixes.size() < 2) {
    throw DataError("localize: need at least two valid GNSS fixes");
  }

  const double epoch_dt = estimate_epoch_dt(fixes);
  const double t0 = fixes[1].t;  // fix[0] is consumed by initialization
  const double t_end = imu.empty() ? fixes.back().t : imu.back().t;

  std::optional<geom::ElementChain> chain;
  if (opts.map != nullptr) chain = maps::chain_in_plane(*opts.map, origin);
  fuse::MapFusionOptions fopt;
  fopt.map_sigma = opts.map_sigma;
  fopt.gate_extra = opts.gate_extra;

  std::vector<io::StateLogRow> rows;

  if (method == Method::kGnss) {
    std::size_t fi = 0;
    for (double t = t0; t <= t_end + 1e-9; t += epoch_dt) {
      while (fi < fixes.size() && fixes[fi].t < t - 0.5 * epoch_dt) ++fi;
      io::StateLogRow row;
      row.t = t;
      if (fi < fixes.size() && std::abs(fixes[fi].t - t) < 0.5 * epoch_dt) {
        const auto& m = fixes[fi].meas;
        row.x = m.x;
        row.y = m.y;
        row.v = m.speed;
        row.psi = 0.0;
        row.p_diag[0] = m.cov_xx;
        row.p_diag[1] = m.cov_yy;
        row.cov_xy = m.cov_xy;
        row.sigma3_along = 3.0 * std::sqrt(m.cov_xx);
        row.sigma3_cross = 3.0 * std::sqrt(m.cov_yy);
        row.available = true;
      } else {
        row.x = row.y = std::numeric_limits<double>::quiet_NaN();
        row.sigma3_along = row.sigma3_cross = std::numeric_limits<double>::infinity();
        row.available = false;
      }
      rows.push_back(row);
    }
    return rows;
  }

  // Filter initialization from the first two valid fixes.
  const auto& f0 = fixes[0];
  const auto& f1 = fixes[1];
  const double dx = f1.meas.x - f0.meas.x;
  const double dy = f1.meas.y - f0.meas.y;
  const double dist = std::hypot(dx, dy);
  KinematicState init;
  init.mean << f1.meas.x, f1.meas.y, f1.meas.speed,
      (dist > 1e-6 ? std::atan2(dy, dx) : 0.0), 0.0;
  const double pos_sigma = std::sqrt(0.5 * (f1.meas.cov_xx + f1.meas.cov_yy));
  double psi_var = geom::kPi * geom::kPi / 4.0;
  if (dist > 1e-6) {
    const double s = 1.5 * pos_sigma / dist;
    psi_var = std::min(psi_var, s * s + 1e-4);
  }
  init.cov = filters::Mat5::Zero();
  init.cov(kX, kX) = f1.meas.cov_xx;
  init.cov(kX, kY) = init.cov(kY, kX) = f1.meas.cov_xy;
  init.cov(kY, kY) = f1.meas.cov_yy;
  init.cov(kV, kV) = 4.0 * f1.meas.speed_var;
  init.cov(kPsi, kPsi) = psi_var;
  init.cov(kOmega, kOmega) = 0.01;

  const double dt = opts.tuning.step_dt;
  const long steps_per_epoch = std::lround(epoch_dt / dt);
  if (steps_per_epoch < 1 || std::abs(steps_per_epoch * dt - epoch_dt) > 1e-9) {
    throw ConfigError("filter_dt must divide the GNSS epoch interval");
  }

  KinematicState kf_state = init;
  filters::ImmState imm_state = filters::imm_init(init);

  auto emit = [&](double t) {
    io::StateLogRow row;
    row.t = t;
    row.available = true;
    const KinematicState& st =
        (method == Method::kImm) ? imm_state.fused : kf_state;
    fill_state_columns(row, st);
    if (method == Method::kImm) {
      row.mu[0] = imm_state.mu(0);
      row.mu[1] = imm_state.mu(1);
      row.mu[2] = imm_state.mu(2);
    } else {
      row.mu[0] = row.mu[1] = 0.0;
      row.mu[2] = 1.0;
    }
    if (chain) {
      const fuse::FusedPosition fp = fuse::fuse_with_map(t, st, &*chain, fopt);
      apply_fused_columns(row, fp);
      if (opts.closed_loop && fp.map_constrained) {
        if (method == Method::kImm) {
          for (auto& m : imm_state.models) inject_position(m, fp);
          imm_state.fused = filters::moment_match(imm_state.models, imm_state.mu);
        } else {
          inject_position(kf_state, fp);
        }
      }
    }
    rows.push_back(row);
  };

  emit(t0);

  std::size_t imu_i = 0;
  while (imu_i < imu.size() && imu[imu_i].t <= t0) ++imu_i;
  std::size_t fix_i = 2;
  long step = 0;
  double t_prev = t0;
  for (;;) {
    const double t = t0 + static_cast<double>(step + 1) * dt;
    if (t > t_end + 1e-9) break;

    ImuBatch batch;
    double sum_g = 0.0, sum_a = 0.0;
    int n = 0;
    while (imu_i < imu.size() && imu[imu_i].t <= t + 1e-9) {
      sum_g += imu[imu_i].gyro[2];
      sum_a += imu[imu_i].accel[0];
      ++n;
      ++imu_i;
    }
    if (n > 0) {
      batch.mean_gyro_z = sum_g / n;
      batch.mean_accel_fwd = sum_a / n;
      batch.n_samples = n;
    }

    std::optional<filters::GnssMeas> meas;
    while (fix_i < fixes.size() && fixes[fix_i].t <= t_prev + 1e-9) ++fix_i;
    if (fix_i < fixes.size() && fixes[fix_i].t <= t + 1e-9) {
      meas = fixes[fix_i].meas;
      ++fix_i;
    }

    if (method == Method::kImm) {
      imm_state = filters::imm_step(imm_state, batch, meas, dt, opts.tuning);
    } else {
      kf_state = filters::kf_step(kf_state, batch, meas, dt, opts.tuning,
                                  filters::ModelKind::kFree);
    }

    ++step;
    t_prev = t;
    if (step % steps_per_epoch == 0) emit(t);
  }
  return rows;
}

MapBuildResult build_map_from_log(const std::vector<io::StateLogRow>& log,
                                  const MapBuildOptions& opts) {
  if (log.size() < 10) throw DataError("build_map_from_log: log too short");

  std::vector<filters::EpochProbabilities> epochs;
  epochs.reserve(log.size());
  for (const auto& r : log) {
    if (!r.available) continue;
    filters::EpochProbabilities e;
    e.t = r.t;
    e.mu_straight = r.mu[0];
    e.mu_arc = r.mu[1];
    e.mu_free = r.mu[2];
    e.omega = r.omega;
    e.omega_var = r.p_diag[4];
    epochs.push_back(e);
  }

  MapBuildResult out;
  out.events = filters::classify_segments(epochs, opts.classify);

  for (const auto& ev : out.events) {
    if (ev.kind == filters::GeometryEvent::Kind::kEnterUnknown) continue;
    std::vector<filters::StateSnapshot> states;
    for (const auto& r : log) {
      if (!r.available || r.t < ev.t - 1e-9 || r.t > ev.t_close + 1e-9) continue;
      filters::StateSnapshot s;
      s.t = r.t;
      s.state.mean << r.x, r.y, r.v, r.psi, r.omega;
      s.state.cov = filters::Mat5::Zero();
      for (int i = 0; i < 5; ++i) s.state.cov(i, i) = r.p_diag[i];
      s.state.cov(kX, kY) = s.state.cov(kY, kX) = r.cov_xy;
      states.push_back(s);
    }
    if (static_cast<int>(states.size()) < opts.min_segment_epochs) continue;
    try {
      if (ev.kind == filters::GeometryEvent::Kind::kEnterStraight) {
        out.segments.push_back(filters::fit_straight_params(states));
      } else {
        try {
          out.segments.push_back(filters::fit_arc_params(states));
        } catch (const filters::DegenerateFitError&) {
          out.segments.push_back(filters::fit_straight_params(states));
        }
      }
    } catch (const DomainError&) {
      // Unfittable segment (degenerate span); skip it.
    }
  }
  if (out.segments.size() < 2) {
    throw DataError("too few identified segments (" +
                    std::to_string(out.segments.size()) +
                    ") to assemble a map; longer runs or looser hysteresis needed");
  }

  const maps::TrackMap assembled =
      maps::assemble_map(out.segments, opts.origin, opts.gap_threshold);

  std::vector<maps::TracePoint> trace;
  trace.reserve(log.size());
  for (const auto& r : log) {
    if (!r.available) continue;
    maps::TracePoint p;
    p.x = r.x;
    p.y = r.y;
    const double s3 = std::max(r.sigma3_cross, 1e-3);
    p.weight = 1.0 / (s3 * s3);
    trace.push_back(p);
  }

  out.refine = maps::refine_map(assembled, trace, opts.origin, opts.refine);
  out.map = out.refine.map;

  if (opts.requantize) {
    maps::TrackMap snapped = out.map;
    snapped.p0.lat_deg = std::round(snapped.p0.lat_deg * 1e6) / 1e6;
    snapped.p0.lon_deg = std::round(snapped.p0.lon_deg * 1e6) / 1e6;
    double psi = std::fmod(snapped.start_heading_deg, 360.0);
    if (psi < 0.0) psi += 360.0;
    snapped.start_heading_deg = std::round(psi * 10.0) / 10.0;
    maps::RefineOptions ropt = opts.refine;
    ropt.freeze_anchor = true;
    const maps::RefineResult requant = maps::refine_map(snapped, trace, opts.origin, ropt);
    out.map = requant.map;
    out.refine.weighted_rms = requant.weighted_rms;
  }

  // The weighted RMS understates the map's error against truth because the
  // trace errors are serially correlated; 1.5x calibrates the fused
  // covariance to >= 99% coverage on synthetic runs (2x).
  out.map_sigma = std::max(opts.map_sigma_floor, 2.0 * out.refine.weighted_rms);
  return out;
}

}  // namespace railloc::pipeline
