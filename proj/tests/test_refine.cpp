#include <doctest.h>

#include <cmath>

#include "railloc/errors.hpp"
#include "railloc/map_refine.hpp"
#include "railloc/track_map.hpp"

using namespace railloc;
using geom::ElementChain;
using geom::GeoPoint;
using geom::Pose2;
using geom::Shape;
using maps::TrackMap;
using maps::TracePoint;

namespace {

const GeoPoint kOrigin{50.548, 12.913};

TrackMap truth_map() {
  TrackMap map;
  map.p0 = kOrigin;
  map.start_heading_deg = 231.2;
  map.elements = {geom::make_straight(218.0),
                  geom::make_clothoid(76.0, 0.0, 1.0 / 376.0),
                  geom::make_arc(136.0, 1.0 / 376.0),
                  geom::make_clothoid(37.0, 1.0 / 376.0, 1.0 / 197.0),
                  geom::make_arc(87.0, 1.0 / 197.0)};
  return map;
}

std::vector<TracePoint> sample_trace(const TrackMap& map, double spacing) {
  const ElementChain chain = maps::chain_in_plane(map, kOrigin);
  std::vector<TracePoint> trace;
  for (double s = 0.0; s < chain.total_length(); s += spacing) {
    const Pose2 p = chain.pose_at(s);
    trace.push_back({p.x, p.y, 1.0});
  }
  const Pose2 end = chain.pose_at(chain.total_length());
  trace.push_back({end.x, end.y, 1.0});
  return trace;
}

}  // namespace

TEST_CASE("refine recovers a perturbed chain from an exact trace") {
  const TrackMap truth = truth_map();
  const auto trace = sample_trace(truth, 5.0);

  TrackMap initial = truth;
  initial.start_heading_deg += 0.5;
  for (auto& e : initial.elements) e.length *= 1.02;

  const maps::RefineResult res = maps::refine_map(initial, trace, kOrigin);
  CHECK(res.objective_history.back() <= 1e-6);
  REQUIRE(res.map.elements.size() == truth.elements.size());
  for (std::size_t i = 0; i < truth.elements.size(); ++i) {
    CHECK(res.map.elements[i].length ==
          doctest::Approx(truth.elements[i].length).epsilon(1e-3));
  }
}

TEST_CASE("refine is a fixed point on an already optimal map") {
  const TrackMap truth = truth_map();
  const auto trace = sample_trace(truth, 10.0);
  const maps::RefineResult res = maps::refine_map(truth, trace, kOrigin);
  CHECK(res.iterations <= 1);
  REQUIRE(res.map.elements.size() == truth.elements.size());
  for (std::size_t i = 0; i < truth.elements.size(); ++i) {
    CHECK(res.map.elements[i].length ==
          doctest::Approx(truth.elements[i].length).epsilon(1e-6));
  }
}

TEST_CASE("refinement strictly improves a perturbed start and is monotone") {
  const TrackMap truth = truth_map();
  const auto trace = sample_trace(truth, 7.5);

  TrackMap initial = truth;
  initial.start_heading_deg += 0.3;
  initial.elements[2] = geom::make_arc(136.0, 1.0 / 340.0);
  initial.elements[1].kappa1 = 1.0 / 340.0;
  initial.elements[3].kappa0 = 1.0 / 340.0;

  const maps::RefineResult res = maps::refine_map(initial, trace, kOrigin);
  REQUIRE(res.objective_history.size() >= 2);
  CHECK(res.objective_history.back() < res.objective_history.front());
  for (std::size_t i = 1; i < res.objective_history.size(); ++i) {
    CHECK(res.objective_history[i] <= res.objective_history[i - 1]);
  }
  // The identified arc comes back to its true radius.
  CHECK(1.0 / res.map.elements[2].kappa0 == doctest::Approx(376.0).epsilon(0.01));
}

TEST_CASE("refine input validation") {
  const TrackMap truth = truth_map();
  CHECK_THROWS_AS(maps::refine_map(truth, std::vector<TracePoint>(5), kOrigin),
                  DomainError);
  auto trace = sample_trace(truth, 50.0);
  trace[3].x = std::nan("");
  CHECK_THROWS_AS(maps::refine_map(truth, trace, kOrigin), DomainError);
}

TEST_CASE("weights steer the fit") {
  // Trace drawn from a straight 1 m left of the map, but with one tightly
  // weighted point on the map itself: the refined line must end up much
  // closer to the heavy point than the light ones.
  TrackMap map;
  map.p0 = kOrigin;
  map.start_heading_deg = 0.0;
  map.elements = {geom::make_straight(100.0)};
  std::vector<TracePoint> trace;
  for (double x = 0.0; x <= 100.0; x += 5.0) trace.push_back({x, 1.0, 1.0});
  trace.push_back({50.0, 0.0, 400.0});
  const maps::RefineResult res = maps::refine_map(map, trace, kOrigin);
  const ElementChain chain = maps::chain_in_plane(res.map, kOrigin);
  const double y_mid = chain.pose_at(50.0).y;
  CHECK(y_mid < 0.15);  // pulled to the heavy point, not the 1 m offset cloud
}
