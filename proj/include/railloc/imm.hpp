#pragma once

#include <array>

#include "railloc/kalman.hpp"

namespace railloc::filters {

// Model indices inside the IMM bank.
inline constexpr int kModelStraight = 0;
inline constexpr int kModelArc = 1;
inline constexpr int kModelFree = 2;

struct ImmState {
  std::array<KinematicState, 3> models;
  Eigen::Vector3d mu = Eigen::Vector3d::Constant(1.0 / 3.0);
  KinematicState fused;
};

struct ImmStepFlags {
  std::array<StepFlags, 3> per_model;
  bool likelihood_underflow = false;  // all model likelihoods were zero
};

ImmState imm_init(const KinematicState& initial);

// Standard IMM cycle: mixing with the transition matrix, per-model EKF step,
// likelihood-weighted probability update (floored at 1e-300), moment-matched
// fused output.
ImmState imm_step(const ImmState& imm, const ImuBatch& imu,
                  const std::optional<GnssMeas>& gnss, double dt,
                  const FilterTuning& tuning, ImmStepFlags* flags = nullptr);

// Probability-weighted moment match over the model bank (exposed so tests
// can recompute the fused output independently of imm_step's bookkeeping).
KinematicState moment_match(const std::array<KinematicState, 3>& models,
                            const Eigen::Vector3d& weights);

}  // namespace railloc::filters
