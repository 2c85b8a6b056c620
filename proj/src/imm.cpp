#include "railloc/imm.hpp"

#include <cmath>

#include "railloc/errors.hpp"
#include "railloc/geometry.hpp"

namespace railloc::filters {

namespace {

constexpr double kLikelihoodFloor = 1e-300;

int argmax3(const Eigen::Vector3d& v) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace

ImmState imm_init(const KinematicState& initial) {
  ImmState s;
  s.models = {initial, initial, initial};
  s.mu = Eigen::Vector3d::Constant(1.0 / 3.0);
  s.fused = initial;
  return s;
}

KinematicState moment_match(const std::array<KinematicState, 3>& models,
                            const Eigen::Vector3d& weights) {
  // Heading is circular: average deviations around the dominant model's
  // heading so mixing stays well-defined near +-pi.
  const int ref = argmax3(weights);
  const double psi_ref = models[ref].mean(kPsi);

  KinematicState out;
  Vec5 mean = Vec5::Zero();
  double dpsi = 0.0;
  for (int i = 0; i < 3; ++i) {
    mean += weights(i) * models[i].mean;
    dpsi += weights(i) * geom::wrap_angle(models[i].mean(kPsi) - psi_ref);
  }
  mean(kPsi) = psi_ref + dpsi;
  out.mean = mean;

  Mat5 cov = Mat5::Zero();
  for (int i = 0; i < 3; ++i) {
    Vec5 d = models[i].mean - mean;
    d(kPsi) = geom::wrap_angle(models[i].mean(kPsi) - psi_ref) - dpsi;
    cov += weights(i) * (models[i].cov + d * d.transpose());
  }
  out.cov = cov;
  out.mean(kPsi) = geom::wrap_angle(out.mean(kPsi));
  return out;
}

ImmState imm_step(const ImmState& imm, const ImuBatch& imu,
                  const std::optional<GnssMeas>& gnss, double dt,
                  const FilterTuning& tuning, ImmStepFlags* flags) {
  const Eigen::Matrix3d& pi = tuning.transition;
  ImmStepFlags local;

  // (i) Mixing.
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) c(j) += pi(i, j) * imm.mu(i);
  }
  std::array<KinematicState, 3> mixed;
  for (int j = 0; j < 3; ++j) {
    if (c(j) <= 0.0) {
      // Dead hypothesis: nothing mixes into it, keep its own state.
      mixed[j] = imm.models[j];
      continue;
    }
    Eigen::Vector3d w;
    for (int i = 0; i < 3; ++i) w(i) = pi(i, j) * imm.mu(i) / c(j);
    mixed[j] = moment_match(imm.models, w);
  }

  // (ii) Per-model EKF step.
  ImmState out;
  Eigen::Vector3d lik;
  static constexpr ModelKind kKinds[3] = {ModelKind::kStraight, ModelKind::kArc,
                                          ModelKind::kFree};
  for (int j = 0; j < 3; ++j) {
    out.models[j] =
        kf_step(mixed[j], imu, gnss, dt, tuning, kKinds[j], &local.per_model[j]);
    lik(j) = local.per_model[j].likelihood;
  }

  // (iii) Probability update.
  if (lik.maxCoeff() <= 0.0) {
    out.mu = imm.mu;
    local.likelihood_underflow = true;
  } else {
    for (int j = 0; j < 3; ++j) lik(j) = std::max(lik(j), kLikelihoodFloor);
    Eigen::Vector3d mu;
    for (int j = 0; j < 3; ++j) mu(j) = c(j) * lik(j);
    const double norm = mu.sum();
    if (norm <= 0.0 || !std::isfinite(norm)) {
      out.mu = imm.mu;
      local.likelihood_underflow = true;
    } else {
      out.mu = mu / norm;
    }
  }

  // (iv) Moment-matched output.
  out.fused = moment_match(out.models, out.mu);
  if (flags != nullptr) *flags = local;
  return out;
}

}  // namespace railloc::filters
