#pragma once

#include <string>
#include <vector>

#include "railloc/geo.hpp"
#include "railloc/geometry.hpp"

namespace railloc::maps {

// Compact geometric track-map: an ordered element chain anchored at a
// geodetic start point. start_heading_deg is the heading at p0 measured in
// the tangent plane anchored at p0 itself (CCW from east), which makes the
// stored map independent of any working plane.
struct TrackMap {
  geom::GeoPoint p0;
  double start_heading_deg = 0.0;
  std::vector<geom::TrackElement> elements;

  double total_length() const;
};

// Chain start pose of `map` expressed in the tangent plane anchored at
// `plane_origin`.
geom::Pose2 start_pose_in_plane(const TrackMap& map, const geom::GeoPoint& plane_origin);

// Instantiated chain in a working plane (cached, cheap projections).
geom::ElementChain chain_in_plane(const TrackMap& map, const geom::GeoPoint& plane_origin);

// Build a TrackMap whose chain reproduces `start`..`elements` in the plane
// anchored at `plane_origin`.
TrackMap map_from_chain(const geom::Pose2& start,
                        std::vector<geom::TrackElement> elements,
                        const geom::GeoPoint& plane_origin);

// Verifies chain-continuity invariants (they hold by construction; this
// re-derives the joint poses and checks curvature continuity at every joint
// touching a transitional arc). Throws DomainError on violation.
void check_map_invariants(const TrackMap& map);

// Straight or circular-arc piece identified from a filter state history.
struct IdentifiedSegment {
  geom::Shape shape = geom::Shape::kStraight;  // straight or circular arc only
  double start_time = 0.0;  // s
  double end_time = 0.0;    // s
  geom::Pose2 anchor;       // fitted start pose, working plane
  double length = 0.0;      // m
  double curvature = 0.0;   // 1/m, signed; 0 for straights
  double fit_rms = 0.0;     // m
};

// Chain identified segments into a continuous map, filling each inter-segment
// gap with a clothoid (kappa taken from the neighbors, length initialized to
// the gap chord). Gaps shorter than `gap_threshold` get no clothoid.
TrackMap assemble_map(const std::vector<IdentifiedSegment>& segments,
                      const geom::GeoPoint& plane_origin,
                      double gap_threshold = 0.5);

}  // namespace railloc::maps
