#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "railloc/config.hpp"
#include "railloc/errors.hpp"
#include "railloc/simulator.hpp"
#include "railloc/state_log.hpp"
#include "railloc/stream_io.hpp"

using namespace railloc;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("railloc_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int counter;
};
int TempDir::counter = 0;

}  // namespace

TEST_CASE("jsonl streams round trip") {
  TempDir dir;
  const geom::GeoPoint origin{50.548, 12.913};
  const maps::TrackMap map = sim::build_track(
      {{geom::Shape::kStraight, 300.0, {}},
       {geom::Shape::kTransitionalArc, 50.0, 213.0},
       {geom::Shape::kCircularArc, 120.0, 213.0}},
      origin, 30.0);
  sim::RunConfig cfg;
  cfg.speed_profile = {{0.0, 10.0}, {500.0, 10.0}};
  cfg.imu_rate_hz = 50.0;
  cfg.seed = 3;
  const sim::SimResult res = sim::simulate_run(map, cfg);

  io::save_truth_jsonl(res.truth, origin, dir.file("truth.jsonl"), "m");
  io::save_gnss_jsonl(res.gnss, origin, dir.file("gnss.jsonl"), "m");
  io::save_imu_jsonl(res.imu, origin, dir.file("imu.jsonl"), "m");

  const io::TruthStream truth = io::load_truth_jsonl(dir.file("truth.jsonl"));
  const io::GnssStream gnss = io::load_gnss_jsonl(dir.file("gnss.jsonl"));
  const io::ImuStream imu = io::load_imu_jsonl(dir.file("imu.jsonl"));

  CHECK(truth.origin.lat_deg == origin.lat_deg);
  REQUIRE(truth.samples.size() == res.truth.size());
  REQUIRE(gnss.fixes.size() == res.gnss.size());
  REQUIRE(imu.samples.size() == res.imu.size());
  for (std::size_t i = 0; i < res.truth.size(); i += 17) {
    CHECK(truth.samples[i].pose.x == res.truth[i].pose.x);
    CHECK(truth.samples[i].yaw_rate == res.truth[i].yaw_rate);
  }
  for (std::size_t i = 0; i < res.gnss.size(); ++i) {
    CHECK(gnss.fixes[i].position.lat_deg == res.gnss[i].position.lat_deg);
    CHECK(gnss.fixes[i].cov_ee == res.gnss[i].cov_ee);
  }
  // IMU stream continues through the whole run.
  CHECK(imu.samples.back().t == res.imu.back().t);
}

TEST_CASE("jsonl parse errors carry line numbers") {
  TempDir dir;
  io::write_text_file(dir.file("bad.jsonl"),
                      "{\"type\":\"meta\",\"origin_lat_deg\":1,\"origin_lon_deg\":2}\n"
                      "{not json}\n");
  CHECK_THROWS_WITH_AS(io::load_gnss_jsonl(dir.file("bad.jsonl")),
                       doctest::Contains(":2"), DataError);
}

TEST_CASE("state log csv round trips rows and origin") {
  std::vector<io::StateLogRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    auto& r = rows[i];
    r.t = i;
    r.x = 10.0 * i + 0.123456;
    r.y = -5.0 * i;
    r.v = 11.1;
    r.psi = 0.45;
    r.omega = 0.002;
    r.mu[0] = 0.7;
    r.mu[1] = 0.2;
    r.mu[2] = 0.1;
    for (int k = 0; k < 5; ++k) r.p_diag[k] = 0.1 * (k + 1);
    r.cov_xy = 0.05;
    r.sigma3_along = 1.5;
    r.sigma3_cross = 0.8;
    r.has_fused = true;
    r.fused_x = r.x + 0.1;
    r.fused_y = r.y - 0.1;
    r.fused_cov_xx = 0.5;
    r.fused_cov_xy = 0.01;
    r.fused_cov_yy = 0.25;
    r.fused_s = 100.0 * i;
    r.map_constrained = (i != 1);
  }
  rows[2].available = false;

  const geom::GeoPoint origin{50.5, 12.9};
  const std::string text = io::state_log_to_csv(rows, "railloc/test", origin);
  std::optional<geom::GeoPoint> got_origin;
  const auto back = io::state_log_from_csv(text, &got_origin);
  REQUIRE(back.size() == 3);
  REQUIRE(got_origin.has_value());
  CHECK(got_origin->lat_deg == doctest::Approx(50.5));
  CHECK(back[1].x == doctest::Approx(rows[1].x).epsilon(1e-10));
  CHECK(back[1].has_fused);
  CHECK(back[1].map_constrained == false);
  CHECK(back[2].available == false);
  CHECK(back[0].mu[0] == doctest::Approx(0.7));
}

TEST_CASE("state log parse errors name the line") {
  CHECK_THROWS_WITH_AS(io::state_log_from_csv("t,x,y,bogus\n1,2\n"),
                       doctest::Contains("line 2"), DataError);
}

TEST_CASE("config parser") {
  const io::KvConfig kv = io::KvConfig::parse_text(
      "# comment\n"
      "track = track.csv\n"
      "seed = 42\n"
      "speed_profile = 0:8.0, 500:12.0\n"
      "outages = 268-281, 300-305\n"
      "sigma_inflation = 95-175:12\n"
      "closed_loop = true\n",
      "test.cfg");
  CHECK(kv.get_string("track") == "track.csv");
  CHECK(kv.get_uint("seed", 0) == 42);
  CHECK(kv.get_bool("closed_loop", false));
  CHECK_THROWS_AS(kv.get_string("missing_key"), ConfigError);
  CHECK_THROWS_WITH_AS(kv.get_string("nothere"), doctest::Contains("nothere"),
                       ConfigError);

  const auto profile = io::parse_pair_list(kv.get_string("speed_profile"), ':');
  REQUIRE(profile.size() == 2);
  CHECK(profile[1].first == 500.0);
  CHECK(profile[1].second == 12.0);

  const auto outages = io::parse_intervals(kv.get_string("outages"));
  REQUIRE(outages.size() == 2);
  CHECK(outages[0].t0 == 268.0);
  CHECK(outages[0].t1 == 281.0);

  const auto phases = io::parse_inflation(kv.get_string("sigma_inflation"));
  REQUIRE(phases.size() == 1);
  CHECK(phases[0].scale == 12.0);
}

TEST_CASE("manifest lines are deterministic") {
  TempDir dir;
  io::write_text_file(dir.file("a.txt"), "hello");
  const auto h1 = io::fnv1a_file(dir.file("a.txt"));
  const auto h2 = io::fnv1a_file(dir.file("a.txt"));
  CHECK(h1 == h2);
  CHECK(io::hash_hex(h1).size() == 16);
  const std::string line = io::manifest_line(7, {{"a", io::hash_hex(h1)}});
  CHECK(line.find("seed=7") != std::string::npos);
  CHECK(line.find("a:") != std::string::npos);
}
