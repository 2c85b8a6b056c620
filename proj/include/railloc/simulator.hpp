#pragma once

#include <optional>
#include <vector>

#include "railloc/sensors.hpp"
#include "railloc/track_map.hpp"

namespace railloc::sim {

// Element of a ground-truth track description: shape, length and (for
// curved shapes) the signed radius. Transitional-arc radii are optional;
// when present they must agree with the neighbor elements.
struct TrackSpecElement {
  geom::Shape shape = geom::Shape::kStraight;
  double length = 0.0;
  std::optional<double> radius;  // m, signed, left positive
};

maps::TrackMap build_track(const std::vector<TrackSpecElement>& spec,
                           const geom::GeoPoint& origin, double heading_deg);

// Integrates the truth run along the track at IMU rate and synthesizes the
// GNSS and IMU streams. Deterministic for a fixed (map, cfg) pair.
SimResult simulate_run(const maps::TrackMap& map, const RunConfig& cfg);

}  // namespace railloc::sim
