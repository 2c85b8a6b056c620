#pragma once

#include <optional>

#include <Eigen/Dense>

namespace railloc::filters {

// State vector indices: [x, y, v, psi, omega].
inline constexpr int kX = 0;
inline constexpr int kY = 1;
inline constexpr int kV = 2;
inline constexpr int kPsi = 3;
inline constexpr int kOmega = 4;

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

struct KinematicState {
  Vec5 mean = Vec5::Zero();
  Mat5 cov = Mat5::Identity();

  double x() const { return mean(kX); }
  double y() const { return mean(kY); }
  double speed() const { return mean(kV); }
  double heading() const { return mean(kPsi); }
  double yaw_rate() const { return mean(kOmega); }
};

// IMU measurements averaged over one filter step.
struct ImuBatch {
  double mean_gyro_z = 0.0;    // rad/s
  double mean_accel_fwd = 0.0; // m/s^2
  int n_samples = 0;
};

// GNSS fix expressed in the working plane.
struct GnssMeas {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  double cov_xx = 0.0;
  double cov_xy = 0.0;
  double cov_yy = 0.0;
  double speed_var = 0.0;
};

enum class ModelKind { kStraight, kArc, kFree };

struct FilterTuning {
  double step_dt = 0.1;

  double gyro_sample_sigma = 2.24e-3;  // rad/s per IMU sample
  double gyro_bias_budget = 1.0e-3;    // rad/s
  double accel_sample_sigma = 3.35e-2; // m/s^2 per IMU sample
  double accel_bias_budget = 2.0e-2;   // m/s^2
  double speed_meas_sigma = 0.1;       // m/s

  double pseudo_omega_sigma = 2.0e-4;  // straight model's omega = 0 constraint

  // Per-step standard deviations of the process noise increments. The free
  // model absorbs unmodeled maneuvers (geometry transitions, jerks) and runs
  // with inflated position noise; the constrained models trust their
  // geometry.
  double q_pos = 3.5e-2;          // m, straight/arc models
  double q_pos_free = 1.0e-1;     // m, unconstrained model (= standard KF)
  double q_psi = 2.0e-5;          // rad
  double q_omega_straight = 5.0e-6;  // rad/s
  double q_omega_arc = 2.0e-5;
  double q_omega_free = 4.0e-3;

  Eigen::Matrix3d transition = default_transition();

  static Eigen::Matrix3d default_transition() {
    Eigen::Matrix3d pi;
    // Rows/cols ordered straight, arc, free; off-diagonal mass biased toward
    // the unconstrained model.
    pi << 0.98, 0.005, 0.015,
          0.005, 0.98, 0.015,
          0.01, 0.01, 0.98;
    return pi;
  }
};

struct StepFlags {
  bool gnss_applied = false;
  bool gnss_skipped_singular = false;
  bool speed_clamped = false;
  bool psd_projected = false;
  // Product of the Gaussian densities of the measurements consumed this
  // step: GNSS innovation when a fix is present, otherwise the gyro (and
  // straight-model pseudo-measurement) densities.
  double likelihood = 1.0;
};

// Generic scalar Kalman update (exposed for tests and the map-constraint
// fusion): returns posterior (mean, variance) given prior, measurement z,
// measurement variance r, unit observation.
std::pair<double, double> scalar_kalman_update(double mean, double var, double z,
                                               double r);

// Symmetrize and project onto the PSD cone (eigenvalues clamped at 0).
void enforce_psd(Mat5& p, bool* projected = nullptr);

// One EKF step of the constant-turn-rate-and-speed model driven by the IMU
// batch (forward accel as speed input, gyro-z as a yaw-rate measurement),
// with an optional GNSS position/speed update. The straight model applies
// an omega = 0 pseudo-measurement; the arc model constrains omega through
// near-zero process noise; the free model inflates it.
KinematicState kf_step(const KinematicState& state, const ImuBatch& imu,
                       const std::optional<GnssMeas>& gnss, double dt,
                       const FilterTuning& tuning, ModelKind model,
                       StepFlags* flags = nullptr);

}  // namespace railloc::filters
