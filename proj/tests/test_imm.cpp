#include <doctest.h>

#include <cmath>
#include <random>

#include "railloc/imm.hpp"
#include "railloc/pipeline.hpp"
#include "railloc/simulator.hpp"

using namespace railloc;
using filters::FilterTuning;
using filters::GnssMeas;
using filters::ImmState;
using filters::ImuBatch;
using filters::KinematicState;
using filters::Mat5;
using filters::ModelKind;

namespace {

const geom::GeoPoint kOrigin{50.548, 12.913};

sim::RunConfig quiet_config(double total_length, double speed) {
  sim::RunConfig cfg;
  cfg.speed_profile = {{0.0, speed}, {total_length + 1.0, speed}};
  cfg.gnss_sigma_east = 1e-12;
  cfg.gnss_sigma_north = 1e-12;
  cfg.gnss_speed_sigma = 1e-12;
  cfg.gyro_noise_density = 0.0;
  cfg.gyro_bias = 0.0;
  cfg.accel_noise_density = 0.0;
  cfg.accel_bias = 0.0;
  cfg.imu_rate_hz = 100.0;
  return cfg;
}

std::vector<io::StateLogRow> run_imm(const maps::TrackMap& map,
                                     const sim::RunConfig& cfg) {
  const sim::SimResult res = sim::simulate_run(map, cfg);
  pipeline::LocalizeOptions opts;
  return pipeline::localize(pipeline::Method::kImm, res.gnss, res.imu, map.p0, opts);
}

}  // namespace

TEST_CASE("model probabilities stay normalized") {
  FilterTuning tun;
  KinematicState init;
  init.mean << 0.0, 0.0, 10.0, 0.0, 0.0;
  init.cov = Mat5::Identity();
  ImmState imm = filters::imm_init(init);
  std::mt19937 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    ImuBatch batch{0.002 * g(rng), 0.02 * g(rng), 50};
    std::optional<GnssMeas> z;
    if (i % 10 == 0) {
      GnssMeas m;
      m.x = 10.0 * 0.1 * i + g(rng);
      m.y = g(rng);
      m.speed = 10.0;
      m.cov_xx = m.cov_yy = 1.44;
      m.cov_xy = 0.0;
      m.speed_var = 0.01;
      z = m;
    }
    imm = filters::imm_step(imm, batch, z, 0.1, tun);
    CHECK(std::abs(imm.mu.sum() - 1.0) <= 1e-12);
    for (int j = 0; j < 3; ++j) {
      CHECK(imm.mu(j) >= 0.0);
      CHECK(imm.mu(j) <= 1.0);
    }
  }
}

TEST_CASE("IMM with identity transition and unit free-model probability equals the EKF bit for bit") {
  FilterTuning tun;
  tun.transition = Eigen::Matrix3d::Identity();

  KinematicState init;
  init.mean << 2.0, -1.0, 11.0, 0.3, 0.001;
  init.cov = Mat5::Identity() * 2.0;

  ImmState imm = filters::imm_init(init);
  imm.mu << 0.0, 0.0, 1.0;
  KinematicState ekf = init;

  std::mt19937 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  int epochs = 0;
  for (int i = 0; epochs < 500; ++i) {
    ImuBatch batch{0.01 + 0.002 * g(rng), 0.05 * g(rng), 50};
    std::optional<GnssMeas> z;
    if (i % 10 == 0) {
      GnssMeas m;
      m.x = ekf.x() + 1.2 * g(rng);
      m.y = ekf.y() + 1.2 * g(rng);
      m.speed = std::max(0.0, ekf.speed() + 0.1 * g(rng));
      m.cov_xx = m.cov_yy = 1.44;
      m.cov_xy = 0.0;
      m.speed_var = 0.01;
      z = m;
      ++epochs;
    }
    imm = filters::imm_step(imm, batch, z, 0.1, tun);
    ekf = filters::kf_step(ekf, batch, z, 0.1, tun, ModelKind::kFree);

    for (int k = 0; k < 5; ++k) {
      CHECK(imm.fused.mean(k) == ekf.mean(k));
      for (int l = 0; l < 5; ++l) {
        CHECK(imm.fused.cov(k, l) == ekf.cov(k, l));
      }
    }
    CHECK(imm.mu(2) == 1.0);
    CHECK(imm.mu(0) == 0.0);
    CHECK(imm.mu(1) == 0.0);
  }
}

TEST_CASE("fused output is the probability-weighted moment match") {
  FilterTuning tun;
  KinematicState init;
  init.mean << 0.0, 0.0, 9.0, 0.1, 0.0;
  init.cov = Mat5::Identity();
  ImmState imm = filters::imm_init(init);
  std::mt19937 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 45; ++i) {
    ImuBatch batch{0.01 * g(rng), 0.02 * g(rng), 50};
    std::optional<GnssMeas> z;
    if (i % 10 == 5) {
      GnssMeas m;
      m.x = g(rng);
      m.y = g(rng);
      m.speed = 9.0;
      m.cov_xx = m.cov_yy = 1.0;
      m.cov_xy = 0.0;
      m.speed_var = 0.01;
      z = m;
    }
    imm = filters::imm_step(imm, batch, z, 0.1, tun);
  }

  // Independent recomputation of the moment match.
  Eigen::Matrix<double, 5, 1> mean = Eigen::Matrix<double, 5, 1>::Zero();
  for (int j = 0; j < 3; ++j) mean += imm.mu(j) * imm.models[j].mean;
  // Headings here stay far from the wrap seam, so the plain average applies.
  Mat5 cov = Mat5::Zero();
  for (int j = 0; j < 3; ++j) {
    const Eigen::Matrix<double, 5, 1> d = imm.models[j].mean - mean;
    cov += imm.mu(j) * (imm.models[j].cov + d * d.transpose());
  }
  CHECK((imm.fused.mean - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((imm.fused.cov - cov).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("noiseless straight run locks the straight model within 10 epochs") {
  const maps::TrackMap map =
      sim::build_track({{geom::Shape::kStraight, 600.0, {}}}, kOrigin, 25.0);
  const auto rows = run_imm(map, quiet_config(600.0, 12.0));
  REQUIRE(rows.size() > 15);
  bool locked = false;
  for (std::size_t i = 0; i <= 10 && i < rows.size(); ++i) {
    if (rows[i].mu[0] > 0.9) locked = true;
  }
  CHECK(locked);
  CHECK(rows[12].mu[0] > 0.9);
}

TEST_CASE("noiseless arc run locks the arc model within 10 epochs") {
  const maps::TrackMap map =
      sim::build_track({{geom::Shape::kCircularArc, 600.0, 213.0}}, kOrigin, 25.0);
  const auto rows = run_imm(map, quiet_config(600.0, 12.0));
  REQUIRE(rows.size() > 15);
  bool locked = false;
  for (std::size_t i = 0; i <= 10 && i < rows.size(); ++i) {
    if (rows[i].mu[1] > 0.9) locked = true;
  }
  CHECK(locked);
  CHECK(rows[12].mu[1] > 0.9);
}

TEST_CASE("straight model's cross-track variance grows slower during outages") {
  FilterTuning tun;
  KinematicState init;
  init.mean << 0.0, 0.0, 11.0, 0.0, 0.0;  // heading east: cross-track is y
  init.cov = Mat5::Identity() * 0.25;
  // A locked straight knows its heading and yaw rate well; the growth under
  // outage then comes from the per-model yaw-rate process noise.
  init.cov(filters::kPsi, filters::kPsi) = 1e-8;
  init.cov(filters::kOmega, filters::kOmega) = 1e-8;

  KinematicState straight = init, free_model = init;
  ImuBatch quiet_gyro{0.0, 0.0, 50};
  for (int i = 0; i < 300; ++i) {
    straight = filters::kf_step(straight, quiet_gyro, {}, 0.1, tun,
                                ModelKind::kStraight);
    free_model = filters::kf_step(free_model, quiet_gyro, {}, 0.1, tun,
                                  ModelKind::kFree);
  }
  const double growth_straight = straight.cov(filters::kY, filters::kY) - 0.25;
  const double growth_free = free_model.cov(filters::kY, filters::kY) - 0.25;
  CHECK(straight.cov(filters::kY, filters::kY) <
        free_model.cov(filters::kY, filters::kY));
  CHECK(growth_straight < 0.2 * growth_free);
}
