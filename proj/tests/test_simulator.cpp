#include <doctest.h>

#include <cmath>

#include "railloc/errors.hpp"
#include "railloc/simulator.hpp"

using namespace railloc;
using geom::GeoPoint;
using geom::Shape;
using sim::RunConfig;
using sim::TrackSpecElement;

namespace {

const GeoPoint kOrigin{50.548, 12.913};

RunConfig quiet_config(double total_length, double speed = 10.0) {
  RunConfig cfg;
  cfg.speed_profile = {{0.0, speed}, {total_length + 1.0, speed}};
  cfg.gnss_sigma_east = 1e-15;
  cfg.gnss_sigma_north = 1e-15;
  cfg.gnss_speed_sigma = 1e-15;
  cfg.gyro_noise_density = 0.0;
  cfg.gyro_bias = 0.0;
  cfg.accel_noise_density = 0.0;
  cfg.accel_bias = 0.0;
  cfg.imu_rate_hz = 100.0;
  return cfg;
}

}  // namespace

TEST_CASE("build_track reproduces the excerpt curvature profile") {
  // st 218, ta 76, ca r=376 L=136, ta 37, ca r=197 L=87
  std::vector<TrackSpecElement> spec = {
      {Shape::kStraight, 218.0, {}},
      {Shape::kTransitionalArc, 76.0, {}},
      {Shape::kCircularArc, 136.0, 376.0},
      {Shape::kTransitionalArc, 37.0, {}},
      {Shape::kCircularArc, 87.0, 197.0}};
  const maps::TrackMap map = sim::build_track(spec, kOrigin, 231.2);
  REQUIRE(map.elements.size() == 5);
  CHECK(map.elements[0].kappa0 == 0.0);
  CHECK(map.elements[1].kappa0 == 0.0);
  CHECK(map.elements[1].kappa1 == doctest::Approx(1.0 / 376.0));
  CHECK(map.elements[2].kappa0 == doctest::Approx(1.0 / 376.0));
  CHECK(map.elements[3].kappa0 == doctest::Approx(1.0 / 376.0));
  CHECK(map.elements[3].kappa1 == doctest::Approx(1.0 / 197.0));
  CHECK(map.elements[4].kappa1 == doctest::Approx(1.0 / 197.0));
}

TEST_CASE("build_track: single straight and curvature midpoint ramp") {
  const maps::TrackMap one =
      sim::build_track({{Shape::kStraight, 500.0, {}}}, kOrigin, 0.0);
  CHECK(one.elements.size() == 1);

  const maps::TrackMap ramp = sim::build_track({{Shape::kStraight, 100.0, {}},
                                                {Shape::kTransitionalArc, 80.0, 213.0},
                                                {Shape::kCircularArc, 100.0, 213.0}},
                                               kOrigin, 0.0);
  CHECK(geom::element_curvature_at(ramp.elements[1], 40.0) ==
        doctest::Approx(1.0 / 426.0));
}

TEST_CASE("build_track rejects inconsistent transitional arcs") {
  CHECK_THROWS_AS(sim::build_track({{Shape::kStraight, 100.0, {}},
                                    {Shape::kTransitionalArc, 80.0, 999.0},
                                    {Shape::kCircularArc, 100.0, 213.0}},
                                   kOrigin, 0.0),
                  DomainError);
  CHECK_THROWS_AS(sim::build_track({{Shape::kTransitionalArc, 80.0, {}},
                                    {Shape::kTransitionalArc, 80.0, {}}},
                                   kOrigin, 0.0),
                  DomainError);
}

TEST_CASE("noiseless run: fixes on the map, gyro equals v*kappa") {
  const maps::TrackMap map = sim::build_track({{Shape::kStraight, 300.0, {}},
                                               {Shape::kTransitionalArc, 60.0, 213.0},
                                               {Shape::kCircularArc, 200.0, 213.0}},
                                              kOrigin, 12.0);
  const RunConfig cfg = quiet_config(map.total_length());
  const sim::SimResult res = sim::simulate_run(map, cfg);
  REQUIRE(!res.gnss.empty());
  const geom::ElementChain chain = maps::chain_in_plane(map, map.p0);
  for (const auto& fix : res.gnss) {
    const geom::LocalXY xy = geom::geo_to_local(fix.position, map.p0);
    const geom::Projection p = chain.project(xy.x, xy.y);
    // One ulp of a degree near 50 degrees latitude is already ~1e-9 m, so
    // the geodetic round trip floors slightly above the ideal zero.
    CHECK(std::abs(p.signed_distance) < 5e-9);
  }
  for (std::size_t i = 0; i < res.imu.size(); i += 37) {
    CHECK(res.imu[i].gyro[2] == res.truth[i].yaw_rate);
  }
}

TEST_CASE("truth yaw rate is exactly speed times curvature") {
  const maps::TrackMap map = sim::build_track(
      {{Shape::kCircularArc, 400.0, 213.0}}, kOrigin, 0.0);
  RunConfig cfg = quiet_config(map.total_length(), 40.0 / 3.6);
  const sim::SimResult res = sim::simulate_run(map, cfg);
  for (const auto& ts : res.truth) {
    CHECK(ts.yaw_rate == ts.speed * ts.pose.curvature);
  }
  CHECK(res.truth.front().yaw_rate == doctest::Approx(0.05216).epsilon(1e-3));
}

TEST_CASE("outage window excludes fixes but not imu samples") {
  const maps::TrackMap map =
      sim::build_track({{Shape::kStraight, 3200.0, {}}}, kOrigin, 45.0);
  RunConfig cfg = quiet_config(map.total_length(), 10.0);
  cfg.outages = {{268.0, 281.0}};
  const sim::SimResult res = sim::simulate_run(map, cfg);
  bool imu_covered = false;
  for (const auto& fix : res.gnss) {
    CHECK(!(fix.t >= 268.0 && fix.t < 281.0));
  }
  for (const auto& s : res.imu) {
    if (s.t > 270.0 && s.t < 279.0) imu_covered = true;
  }
  CHECK(imu_covered);
  // Epochs on both sides of the window exist.
  bool before = false, after = false;
  for (const auto& fix : res.gnss) {
    if (fix.t == 267.0) before = true;
    if (fix.t == 281.0) after = true;
  }
  CHECK(before);
  CHECK(after);
}

TEST_CASE("identical seeds give bit-identical streams") {
  const maps::TrackMap map = sim::build_track({{Shape::kStraight, 400.0, {}},
                                               {Shape::kTransitionalArc, 50.0, -250.0},
                                               {Shape::kCircularArc, 150.0, -250.0}},
                                              kOrigin, -60.0);
  RunConfig cfg;
  cfg.speed_profile = {{0.0, 12.0}, {700.0, 12.0}};
  cfg.imu_rate_hz = 200.0;
  cfg.seed = 99;
  const sim::SimResult a = sim::simulate_run(map, cfg);
  const sim::SimResult b = sim::simulate_run(map, cfg);
  REQUIRE(a.imu.size() == b.imu.size());
  REQUIRE(a.gnss.size() == b.gnss.size());
  for (std::size_t i = 0; i < a.imu.size(); ++i) {
    CHECK(a.imu[i].gyro[2] == b.imu[i].gyro[2]);
    CHECK(a.imu[i].accel[0] == b.imu[i].accel[0]);
  }
  for (std::size_t i = 0; i < a.gnss.size(); ++i) {
    CHECK(a.gnss[i].position.lat_deg == b.gnss[i].position.lat_deg);
    CHECK(a.gnss[i].position.lon_deg == b.gnss[i].position.lon_deg);
    CHECK(a.gnss[i].speed == b.gnss[i].speed);
  }
  RunConfig cfg2 = cfg;
  cfg2.seed = 100;
  const sim::SimResult c = sim::simulate_run(map, cfg2);
  CHECK(a.gnss[0].position.lat_deg != c.gnss[0].position.lat_deg);
}

TEST_CASE("empirical fix noise matches the configured covariance") {
  const maps::TrackMap map =
      sim::build_track({{Shape::kStraight, 12500.0, {}}}, kOrigin, 30.0);
  RunConfig cfg;
  cfg.speed_profile = {{0.0, 10.0}, {12600.0, 10.0}};
  cfg.imu_rate_hz = 100.0;
  cfg.gnss_rate_hz = 10.0;
  cfg.gnss_sigma_east = 2.0;
  cfg.gnss_sigma_north = 3.0;
  cfg.seed = 4;
  const sim::SimResult res = sim::simulate_run(map, cfg);
  REQUIRE(res.gnss.size() >= 10000);

  const geom::ElementChain chain = maps::chain_in_plane(map, map.p0);
  double see = 0.0, sen = 0.0, snn = 0.0;
  std::size_t n = 0;
  std::size_t ti = 0;
  for (const auto& fix : res.gnss) {
    while (ti + 1 < res.truth.size() && res.truth[ti].t < fix.t) ++ti;
    const geom::LocalXY xy = geom::geo_to_local(fix.position, map.p0);
    const double ex = xy.x - res.truth[ti].pose.x;
    const double en = xy.y - res.truth[ti].pose.y;
    see += ex * ex;
    sen += ex * en;
    snn += en * en;
    ++n;
  }
  see /= n;
  sen /= n;
  snn /= n;
  const double frob_err = std::sqrt(std::pow(see - 4.0, 2) + 2.0 * sen * sen +
                                    std::pow(snn - 9.0, 2));
  const double frob_cfg = std::sqrt(16.0 + 81.0);
  CHECK(frob_err <= 0.10 * frob_cfg);
}

TEST_CASE("yaw-rate signature separates straights from arcs") {
  const maps::TrackMap map = sim::build_track({{Shape::kStraight, 800.0, {}},
                                               {Shape::kTransitionalArc, 60.0, 213.0},
                                               {Shape::kCircularArc, 500.0, 213.0}},
                                              kOrigin, 0.0);
  RunConfig cfg;
  cfg.speed_profile = {{0.0, 11.1}, {1400.0, 11.1}};
  cfg.imu_rate_hz = 100.0;
  cfg.gyro_noise_density = 1e-4;
  cfg.gyro_bias = 8e-4;
  cfg.seed = 21;
  const sim::SimResult res = sim::simulate_run(map, cfg);

  const double gyro_sigma = cfg.gyro_noise_density * std::sqrt(cfg.imu_rate_hz);
  double straight_mean = 0.0, arc_mean = 0.0;
  std::size_t ns = 0, na = 0;
  for (std::size_t i = 0; i < res.imu.size(); ++i) {
    const double s = res.truth[i].arclength;
    if (s < 780.0) {
      straight_mean += std::abs(res.imu[i].gyro[2]);
      ++ns;
    } else if (s > 880.0) {
      arc_mean += std::abs(res.imu[i].gyro[2]);
      ++na;
    }
  }
  straight_mean /= ns;
  arc_mean /= na;
  CHECK(straight_mean < gyro_sigma + cfg.gyro_bias);
  CHECK(arc_mean == doctest::Approx(11.1 / 213.0).epsilon(0.1));
  CHECK(std::abs(arc_mean - 11.1 / 213.0) < 3.0 * gyro_sigma + cfg.gyro_bias);
}

TEST_CASE("speed profile must cover the track") {
  const maps::TrackMap map =
      sim::build_track({{Shape::kStraight, 1000.0, {}}}, kOrigin, 0.0);
  RunConfig cfg;
  cfg.speed_profile = {{0.0, 10.0}, {800.0, 10.0}};  // ends 200 m short
  CHECK_THROWS_AS(sim::simulate_run(map, cfg), DomainError);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  cfg.speed_profile = {{0.0, 10.0}, {100.0, 10.0}};
  SUBCASE("rates positive and commensurate") {
    cfg.imu_rate_hz = 30.0;
    cfg.gnss_rate_hz = 7.0;
    CHECK_THROWS_AS(sim::validate_config(cfg, 50.0), DomainError);
  }
  SUBCASE("overlapping outages rejected") {
    cfg.outages = {{10.0, 20.0}, {15.0, 25.0}};
    CHECK_THROWS_AS(sim::validate_config(cfg, 50.0), DomainError);
  }
  SUBCASE("inflation scale positive") {
    cfg.sigma_inflation = {{10.0, 20.0, -1.0}};
    CHECK_THROWS_AS(sim::validate_config(cfg, 50.0), DomainError);
  }
}
