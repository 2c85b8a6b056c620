#include "railloc/kalman.hpp"

#include <cmath>

#include "railloc/errors.hpp"
#include "railloc/geometry.hpp"

namespace railloc::filters {

namespace {

template <int M>
bool measurement_update(KinematicState& st, const Eigen::Matrix<double, M, 5>& h,
                        const Eigen::Matrix<double, M, 1>& z,
                        const Eigen::Matrix<double, M, M>& r, double* density) {
  const Eigen::Matrix<double, M, 1> nu = z - h * st.mean;
  const Eigen::Matrix<double, M, M> s = h * st.cov * h.transpose() + r;
  Eigen::LLT<Eigen::Matrix<double, M, M>> llt(s);
  if (llt.info() != Eigen::Success) return false;
  for (int i = 0; i < M; ++i) {
    // LLT accepts singular PSD matrices; reject pivots that cannot be
    // inverted meaningfully.
    if (!(llt.matrixLLT()(i, i) > 1e-150)) return false;
  }
  if (density != nullptr) {
    const Eigen::Matrix<double, M, 1> w = llt.matrixL().solve(nu);
    double logdet = 0.0;
    for (int i = 0; i < M; ++i) logdet += std::log(llt.matrixL()(i, i));
    *density = std::exp(-0.5 * w.squaredNorm() - logdet -
                        0.5 * M * std::log(2.0 * geom::kPi));
  }
  const Eigen::Matrix<double, 5, M> k = st.cov * h.transpose() * llt.solve(
      Eigen::Matrix<double, M, M>::Identity());
  st.mean += k * nu;
  const Mat5 ikh = Mat5::Identity() - k * h;
  st.cov = ikh * st.cov * ikh.transpose() + k * r * k.transpose();
  return true;
}

}  // namespace

std::pair<double, double> scalar_kalman_update(double mean, double var, double z,
                                               double r) {
  const double s = var + r;
  const double k = var / s;
  return {mean + k * (z - mean), (1.0 - k) * var};
}

void enforce_psd(Mat5& p, bool* projected) {
  p = 0.5 * (p + p.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat5> eig(p);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    Vec5 lam = eig.eigenvalues().cwiseMax(0.0);
    p = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    p = 0.5 * (p + p.transpose()).eval();
    if (projected != nullptr) *projected = true;
  }
}

KinematicState kf_step(const KinematicState& state, const ImuBatch& imu,
                       const std::optional<GnssMeas>& gnss, double dt,
                       const FilterTuning& tuning, ModelKind model,
                       StepFlags* flags) {
  if (!(dt > 0.0)) throw DomainError("kf_step: dt must be > 0");
  StepFlags local;
  KinematicState st = state;

  // --- Predict: constant turn rate and speed, accel input on v.
  const double a_in = imu.n_samples > 0 ? imu.mean_accel_fwd : 0.0;
  const double v = st.mean(kV);
  const double psi = st.mean(kPsi);
  const double w = st.mean(kOmega);
  const double v_mid = v + 0.5 * a_in * dt;

  Mat5 f = Mat5::Identity();
  if (std::abs(w) > 1e-6) {
    const double psi1 = psi + w * dt;
    const double sp = std::sin(psi), cp = std::cos(psi);
    const double sp1 = std::sin(psi1), cp1 = std::cos(psi1);
    st.mean(kX) += v_mid / w * (sp1 - sp);
    st.mean(kY) += -v_mid / w * (cp1 - cp);
    f(kX, kV) = (sp1 - sp) / w;
    f(kX, kPsi) = v_mid / w * (cp1 - cp);
    f(kX, kOmega) = v_mid * (dt * cp1 * w - (sp1 - sp)) / (w * w);
    f(kY, kV) = -(cp1 - cp) / w;
    f(kY, kPsi) = v_mid / w * (sp1 - sp);
    f(kY, kOmega) = v_mid * (dt * sp1 * w + (cp1 - cp)) / (w * w);
  } else {
    const double sp = std::sin(psi), cp = std::cos(psi);
    st.mean(kX) += v_mid * dt * cp - 0.5 * v_mid * dt * dt * w * sp;
    st.mean(kY) += v_mid * dt * sp + 0.5 * v_mid * dt * dt * w * cp;
    f(kX, kV) = dt * cp;
    f(kX, kPsi) = -v_mid * dt * sp;
    f(kX, kOmega) = -0.5 * v_mid * dt * dt * sp;
    f(kY, kV) = dt * sp;
    f(kY, kPsi) = v_mid * dt * cp;
    f(kY, kOmega) = 0.5 * v_mid * dt * dt * cp;
  }
  st.mean(kV) = v + a_in * dt;
  st.mean(kPsi) = geom::wrap_angle(psi + w * dt);
  f(kPsi, kOmega) = dt;

  const int n = std::max(1, imu.n_samples);
  const double accel_sigma_eff =
      tuning.accel_sample_sigma / std::sqrt(static_cast<double>(n)) +
      tuning.accel_bias_budget;
  double q_omega = tuning.q_omega_free;
  if (model == ModelKind::kStraight) q_omega = tuning.q_omega_straight;
  if (model == ModelKind::kArc) q_omega = tuning.q_omega_arc;
  const double q_pos = (model == ModelKind::kFree) ? tuning.q_pos_free : tuning.q_pos;

  Mat5 q = Mat5::Zero();
  q(kX, kX) = q(kY, kY) = q_pos * q_pos;
  q(kV, kV) = (accel_sigma_eff * dt) * (accel_sigma_eff * dt);
  q(kPsi, kPsi) = tuning.q_psi * tuning.q_psi;
  q(kOmega, kOmega) = q_omega * q_omega;

  st.cov = f * st.cov * f.transpose() + q;

  // --- Gyro yaw-rate measurement (all models).
  if (imu.n_samples > 0) {
    const double gyro_sigma_eff =
        tuning.gyro_sample_sigma / std::sqrt(static_cast<double>(n)) +
        tuning.gyro_bias_budget;
    Eigen::Matrix<double, 1, 5> h = Eigen::Matrix<double, 1, 5>::Zero();
    h(0, kOmega) = 1.0;
    Eigen::Matrix<double, 1, 1> z, r;
    z(0) = imu.mean_gyro_z;
    r(0) = gyro_sigma_eff * gyro_sigma_eff;
    double density = 1.0;
    if (measurement_update<1>(st, h, z, r, &density) && !gnss.has_value()) {
      local.likelihood *= density;
    }
  }

  // --- Straight model: omega = 0 pseudo-measurement.
  if (model == ModelKind::kStraight) {
    Eigen::Matrix<double, 1, 5> h = Eigen::Matrix<double, 1, 5>::Zero();
    h(0, kOmega) = 1.0;
    Eigen::Matrix<double, 1, 1> z, r;
    z(0) = 0.0;
    r(0) = tuning.pseudo_omega_sigma * tuning.pseudo_omega_sigma;
    double density = 1.0;
    if (measurement_update<1>(st, h, z, r, &density) && !gnss.has_value()) {
      local.likelihood *= density;
    }
  }

  // --- GNSS position/speed update.
  if (gnss.has_value()) {
    Eigen::Matrix<double, 3, 5> h = Eigen::Matrix<double, 3, 5>::Zero();
    h(0, kX) = 1.0;
    h(1, kY) = 1.0;
    h(2, kV) = 1.0;
    Eigen::Matrix<double, 3, 1> z;
    z << gnss->x, gnss->y, gnss->speed;
    Eigen::Matrix<double, 3, 3> r = Eigen::Matrix<double, 3, 3>::Zero();
    r(0, 0) = gnss->cov_xx;
    r(0, 1) = r(1, 0) = gnss->cov_xy;
    r(1, 1) = gnss->cov_yy;
    r(2, 2) = gnss->speed_var;
    double density = 1.0;
    if (measurement_update<3>(st, h, z, r, &density)) {
      local.gnss_applied = true;
      local.likelihood = density;
    } else {
      local.gnss_skipped_singular = true;
    }
  }

  if (st.mean(kV) < 0.0) {
    st.cov(kV, kV) += st.mean(kV) * st.mean(kV);
    st.mean(kV) = 0.0;
    local.speed_clamped = true;
  }
  st.mean(kPsi) = geom::wrap_angle(st.mean(kPsi));
  enforce_psd(st.cov, &local.psd_projected);

  if (flags != nullptr) *flags = local;
  return st;
}

}  // namespace railloc::filters
