#include <doctest.h>

#include <cmath>

#include "railloc/errors.hpp"
#include "railloc/map_error.hpp"
#include "railloc/map_io.hpp"
#include "railloc/track_map.hpp"

using namespace railloc;
using geom::ElementChain;
using geom::GeoPoint;
using geom::Pose2;
using geom::Shape;
using geom::TrackElement;
using maps::IdentifiedSegment;
using maps::TrackMap;

namespace {

const GeoPoint kOrigin{50.548, 12.913};

// Identified segments cut out of a known continuous chain, leaving the
// transitional arcs as gaps.
struct SampledSegments {
  std::vector<IdentifiedSegment> segments;
  ElementChain chain;
};

SampledSegments make_st_ca_st() {
  const Pose2 start{0.0, 0.0, 0.4, 0.0};
  std::vector<TrackElement> els = {
      geom::make_straight(100.0), geom::make_clothoid(40.0, 0.0, 1.0 / 213.0),
      geom::make_arc(120.0, 1.0 / 213.0), geom::make_clothoid(40.0, 1.0 / 213.0, 0.0),
      geom::make_straight(100.0)};
  ElementChain chain(start, els);
  std::vector<IdentifiedSegment> segs(3);
  segs[0] = {Shape::kStraight, 0.0, 10.0, chain.element_start(0), 100.0, 0.0, 0.0};
  segs[1] = {Shape::kCircularArc, 14.0, 26.0, chain.element_start(2), 120.0,
             1.0 / 213.0, 0.0};
  segs[2] = {Shape::kStraight, 30.0, 40.0, chain.element_start(4), 100.0, 0.0, 0.0};
  return {segs, chain};
}

}  // namespace

TEST_CASE("assemble straight-arc-straight fills gaps with clothoids") {
  const auto in = make_st_ca_st();
  const TrackMap map = maps::assemble_map(in.segments, kOrigin);
  REQUIRE(map.elements.size() == 5);
  CHECK(map.elements[0].shape == Shape::kStraight);
  CHECK(map.elements[1].shape == Shape::kTransitionalArc);
  CHECK(map.elements[2].shape == Shape::kCircularArc);
  CHECK(map.elements[3].shape == Shape::kTransitionalArc);
  CHECK(map.elements[4].shape == Shape::kStraight);
  CHECK(map.elements[1].kappa0 == 0.0);
  CHECK(map.elements[1].kappa1 == doctest::Approx(1.0 / 213.0));
  // Clothoid length initialized to the gap chord.
  CHECK(map.elements[1].length == doctest::Approx(40.0).epsilon(0.01));
  // Anchored at the first segment's anchor: chain reproduces the truth start.
  const Pose2 p = maps::start_pose_in_plane(map, kOrigin);
  CHECK(p.x == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(p.y == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("assemble arc-arc pair") {
  const Pose2 start{0.0, 0.0, 0.0, 1.0 / 376.0};
  std::vector<TrackElement> els = {geom::make_arc(136.0, 1.0 / 376.0),
                                   geom::make_clothoid(37.0, 1.0 / 376.0, 1.0 / 197.0),
                                   geom::make_arc(87.0, 1.0 / 197.0)};
  ElementChain chain(start, els);
  std::vector<IdentifiedSegment> segs(2);
  segs[0] = {Shape::kCircularArc, 0.0, 10.0, chain.element_start(0), 136.0,
             1.0 / 376.0, 0.0};
  segs[1] = {Shape::kCircularArc, 12.0, 20.0, chain.element_start(2), 87.0,
             1.0 / 197.0, 0.0};
  const TrackMap map = maps::assemble_map(segs, kOrigin);
  REQUIRE(map.elements.size() == 3);
  CHECK(map.elements[1].shape == Shape::kTransitionalArc);
  CHECK(map.elements[1].kappa0 == doctest::Approx(1.0 / 376.0));
  CHECK(map.elements[1].kappa1 == doctest::Approx(1.0 / 197.0));
}

TEST_CASE("collinear straights with zero gap join without a clothoid") {
  std::vector<IdentifiedSegment> segs(2);
  segs[0] = {Shape::kStraight, 0.0, 10.0, Pose2{0.0, 0.0, 0.0, 0.0}, 50.0, 0.0, 0.0};
  segs[1] = {Shape::kStraight, 11.0, 20.0, Pose2{50.0, 0.0, 0.0, 0.0}, 60.0, 0.0, 0.0};
  const TrackMap map = maps::assemble_map(segs, kOrigin);
  REQUIRE(map.elements.size() == 2);
  CHECK(map.elements[0].shape == Shape::kStraight);
  CHECK(map.elements[1].shape == Shape::kStraight);
}

TEST_CASE("assemble rejects overlap and accepts single segment") {
  std::vector<IdentifiedSegment> segs(2);
  segs[0] = {Shape::kStraight, 0.0, 10.0, Pose2{}, 50.0, 0.0, 0.0};
  segs[1] = {Shape::kStraight, 9.0, 20.0, Pose2{100.0, 0.0, 0.0, 0.0}, 60.0, 0.0, 0.0};
  CHECK_THROWS_AS(maps::assemble_map(segs, kOrigin), DomainError);
  const TrackMap one = maps::assemble_map({segs[0]}, kOrigin);
  CHECK(one.elements.size() == 1);
}

TEST_CASE("chain continuity invariants hold after construction") {
  const auto in = make_st_ca_st();
  const TrackMap map = maps::assemble_map(in.segments, kOrigin);
  maps::check_map_invariants(map);
  const ElementChain chain = maps::chain_in_plane(map, kOrigin);
  for (std::size_t i = 0; i + 1 < map.elements.size(); ++i) {
    const Pose2 end =
        geom::element_pose_at(chain.element_start(i), map.elements[i],
                              map.elements[i].length);
    const Pose2& next = chain.element_start(i + 1);
    CHECK(std::abs(end.x - next.x) < 1e-9);
    CHECK(std::abs(end.y - next.y) < 1e-9);
    CHECK(std::abs(geom::wrap_angle(end.heading - next.heading)) < 1e-12);
    if (map.elements[i].shape == Shape::kTransitionalArc ||
        map.elements[i + 1].shape == Shape::kTransitionalArc) {
      CHECK(std::abs(map.elements[i].kappa1 - map.elements[i + 1].kappa0) <= 1e-12);
    }
  }
}

TEST_CASE("map csv format mirrors the compact layout") {
  TrackMap map;
  map.p0 = {50.548, 12.913};
  map.start_heading_deg = 231.2;
  map.elements = {geom::make_straight(218.0),
                  geom::make_clothoid(11.0, 0.0, 1.0 / 213.0),
                  geom::make_arc(27.0, 1.0 / 213.0)};
  const std::string csv = maps::map_to_csv(map);
  CHECK(csv.find("p0_deg,50.548000,12.913000") != std::string::npos);
  CHECK(csv.find("psi0_deg,231.2") != std::string::npos);
  CHECK(csv.find("1,st,218.000,inf") != std::string::npos);
  CHECK(csv.find("2,ta,11.000,213.000") != std::string::npos);
  CHECK(csv.find("3,ca,27.000,213.000") != std::string::npos);

  const TrackMap back = maps::map_from_csv(csv);
  REQUIRE(back.elements.size() == 3);
  CHECK(back.elements[1].shape == Shape::kTransitionalArc);
  CHECK(back.elements[1].length == 11.0);
  CHECK(back.elements[1].kappa0 == 0.0);
  CHECK(back.elements[1].kappa1 == doctest::Approx(1.0 / 213.0).epsilon(1e-5));
  CHECK(back.elements[0].kappa0 == 0.0);  // straight row radius token inf
}

TEST_CASE("map csv save-load-save is byte identical") {
  TrackMap map;
  map.p0 = {50.5481234, 12.9125678};
  map.start_heading_deg = -128.8;  // stored as 231.2
  map.elements = {geom::make_straight(218.765),
                  geom::make_clothoid(76.123, 0.0, -1.0 / 376.0),
                  geom::make_arc(136.5, -1.0 / 376.0),
                  geom::make_clothoid(37.0, -1.0 / 376.0, -1.0 / 197.0),
                  geom::make_arc(87.25, -1.0 / 197.0)};
  const std::string once = maps::map_to_csv(map);
  const std::string twice = maps::map_to_csv(maps::map_from_csv(once));
  CHECK(once == twice);
}

TEST_CASE("map csv parse errors carry row numbers") {
  const std::string head =
      "p0_deg,50.548000,12.913000\npsi0_deg,231.2\nindex,shape,length_m,radius_m\n";
  SUBCASE("unknown shape token") {
    CHECK_THROWS_WITH_AS(maps::map_from_csv(head + "1,zz,10.000,inf\n"),
                         doctest::Contains("row 4"), DataError);
  }
  SUBCASE("non-monotone indices") {
    CHECK_THROWS_WITH_AS(
        maps::map_from_csv(head + "1,st,10.000,inf\n3,st,10.000,inf\n"),
        doctest::Contains("row 5"), DataError);
  }
  SUBCASE("negative length") {
    CHECK_THROWS_WITH_AS(maps::map_from_csv(head + "1,st,-10.000,inf\n"),
                         doctest::Contains("row 4"), DataError);
  }
}

TEST_CASE("map error cdf") {
  TrackMap map;
  map.p0 = kOrigin;
  map.start_heading_deg = 20.0;
  map.elements = {geom::make_straight(250.0),
                  geom::make_clothoid(60.0, 0.0, 1.0 / 213.0),
                  geom::make_arc(120.0, 1.0 / 213.0)};

  SUBCASE("self comparison is zero") {
    const ElementChain chain = maps::chain_in_plane(map, map.p0);
    std::vector<geom::LocalXY> ref;
    for (double s = 0.0; s <= chain.total_length(); s += 0.5) {
      const Pose2 p = chain.pose_at(s);
      ref.push_back({p.x, p.y});
    }
    const maps::MapErrorStats st = maps::map_error_cdf_local(map, ref);
    CHECK(st.mean < 1e-6);
    CHECK(st.max <= 1e-6);
  }

  SUBCASE("constant lateral offset") {
    TrackMap straight;
    straight.p0 = kOrigin;
    straight.start_heading_deg = 0.0;
    straight.elements = {geom::make_straight(100.0)};
    // Same straight shifted 2 m north (left of travel).
    std::vector<geom::LocalXY> ref = {{-50.0, 2.0}, {200.0, 2.0}};
    const maps::MapErrorStats st = maps::map_error_cdf_local(straight, ref);
    CHECK(st.mean == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(st.max == doctest::Approx(2.0).epsilon(1e-9));
  }

  SUBCASE("disjoint geometries rejected") {
    TrackMap straight;
    straight.p0 = kOrigin;
    straight.start_heading_deg = 0.0;
    straight.elements = {geom::make_straight(100.0)};
    std::vector<geom::LocalXY> ref = {{0.0, 2000.0}, {100.0, 2000.0}};
    CHECK_THROWS_AS(maps::map_error_cdf_local(straight, ref), DomainError);
  }

  SUBCASE("reference must have two points") {
    CHECK_THROWS_AS(maps::map_error_cdf(map, {kOrigin}), DomainError);
  }
}

TEST_CASE("map error stats: nearest-rank quantiles in the report layout") {
  std::vector<double> samples(94, 1.0);
  samples.push_back(5.7);               // rank 95
  samples.insert(samples.end(), 3, 6.0);
  samples.push_back(7.5);               // rank 99
  samples.push_back(8.7);               // rank 100
  const maps::MapErrorStats st = maps::map_error_stats_from_samples(samples);
  CHECK(st.quantiles.at(0.95) == doctest::Approx(5.7));
  CHECK(st.quantiles.at(0.99) == doctest::Approx(7.5));
  CHECK(st.quantiles.at(1.00) == doctest::Approx(8.7));
  CHECK(st.max == doctest::Approx(8.7));
  double prev = 0.0;
  for (const auto& [p, q] : st.quantiles) {
    CHECK(q >= prev);
    prev = q;
  }
  CHECK(st.mean <= st.max);
}

TEST_CASE("map chain is plane independent") {
  TrackMap map;
  map.p0 = {50.548, 12.913};
  map.start_heading_deg = 231.2;
  map.elements = {geom::make_straight(1000.0),
                  geom::make_clothoid(60.0, 0.0, -1.0 / 250.0),
                  geom::make_arc(400.0, -1.0 / 250.0)};
  const GeoPoint other_plane{50.52, 12.95};

  const ElementChain own = maps::chain_in_plane(map, map.p0);
  const ElementChain other = maps::chain_in_plane(map, other_plane);
  const Pose2 end_own = own.end();
  const Pose2 end_other = other.end();
  const GeoPoint g1 = geom::local_to_geo({end_own.x, end_own.y}, map.p0);
  const GeoPoint g2 = geom::local_to_geo({end_other.x, end_other.y}, other_plane);
  // Residual tangent-plane distortion stays in the centimeter range.
  CHECK(std::abs(g1.lat_deg - g2.lat_deg) * 111320.0 < 0.05);
  CHECK(std::abs(g1.lon_deg - g2.lon_deg) * 70800.0 < 0.05);
}
