#include "railloc/track_map.hpp"

#include <cmath>
#include <string>

#include "railloc/errors.hpp"

namespace railloc::maps {

using geom::ElementChain;
using geom::GeoPoint;
using geom::Pose2;
using geom::Shape;
using geom::TrackElement;

double TrackMap::total_length() const {
  double sum = 0.0;
  for (const auto& e : elements) sum += e.length;
  return sum;
}

Pose2 start_pose_in_plane(const TrackMap& map, const GeoPoint& plane_origin) {
  const geom::LocalXY xy = geom::geo_to_local(map.p0, plane_origin);
  Pose2 p;
  p.x = xy.x;
  p.y = xy.y;
  p.heading = geom::wrap_angle(geom::heading_local_to_plane(
      map.start_heading_deg * geom::kPi / 180.0, map.p0, plane_origin));
  p.curvature = map.elements.empty() ? 0.0 : map.elements.front().kappa0;
  return p;
}

ElementChain chain_in_plane(const TrackMap& map, const GeoPoint& plane_origin) {
  if (map.elements.empty()) {
    throw DomainError("track map has no elements");
  }
  return ElementChain(start_pose_in_plane(map, plane_origin), map.elements);
}

TrackMap map_from_chain(const Pose2& start, std::vector<TrackElement> elements,
                        const GeoPoint& plane_origin) {
  TrackMap map;
  map.p0 = geom::local_to_geo({start.x, start.y}, plane_origin);
  map.start_heading_deg =
      geom::wrap_angle(geom::heading_plane_to_local(start.heading, map.p0, plane_origin)) *
      180.0 / geom::kPi;
  map.elements = std::move(elements);
  check_map_invariants(map);
  return map;
}

void check_map_invariants(const TrackMap& map) {
  geom::validate_geo(map.p0);
  if (map.elements.empty()) {
    throw DomainError("track map has no elements");
  }
  for (const auto& e : map.elements) geom::validate_element(e);
  for (std::size_t i = 0; i + 1 < map.elements.size(); ++i) {
    const TrackElement& a = map.elements[i];
    const TrackElement& b = map.elements[i + 1];
    if (a.shape == Shape::kTransitionalArc || b.shape == Shape::kTransitionalArc) {
      if (std::abs(a.kappa1 - b.kappa0) > 1e-12) {
        throw DomainError("curvature discontinuity at joint " + std::to_string(i) +
                          ": " + std::to_string(a.kappa1) + " vs " +
                          std::to_string(b.kappa0));
      }
    }
  }
  // Position/heading continuity is structural (each element starts at the
  // integrated end of the previous one); instantiating the chain asserts the
  // arithmetic stays finite.
  ElementChain chain(start_pose_in_plane(map, map.p0), map.elements);
  const Pose2& end = chain.end();
  if (!std::isfinite(end.x) || !std::isfinite(end.y)) {
    throw NumericalError("track map chain integration produced non-finite pose");
  }
}

TrackMap assemble_map(const std::vector<IdentifiedSegment>& segments,
                      const GeoPoint& plane_origin, double gap_threshold) {
  if (segments.empty()) {
    throw DomainError("assemble_map: no segments");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.length <= 0.0) {
      throw DomainError("assemble_map: segment " + std::to_string(i) +
                        " has non-positive length");
    }
    if (s.shape == Shape::kTransitionalArc) {
      throw DomainError("assemble_map: identified segments are straights or arcs");
    }
    if (i > 0 && s.start_time < segments[i - 1].end_time) {
      throw DomainError("assemble_map: segments overlap in time at index " +
                        std::to_string(i));
    }
  }

  auto as_element = [](const IdentifiedSegment& s) {
    return s.shape == Shape::kStraight ? geom::make_straight(s.length)
                                       : geom::make_arc(s.length, s.curvature);
  };

  std::vector<TrackElement> elements;
  elements.push_back(as_element(segments.front()));
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    const IdentifiedSegment& cur = segments[i];
    const IdentifiedSegment& nxt = segments[i + 1];
    const Pose2 cur_end = geom::element_pose_at(cur.anchor, as_element(cur), cur.length);
    const double chord = std::hypot(nxt.anchor.x - cur_end.x, nxt.anchor.y - cur_end.y);
    if (chord >= gap_threshold) {
      elements.push_back(geom::make_clothoid(chord, cur.curvature, nxt.curvature));
    }
    elements.push_back(as_element(nxt));
  }

  return map_from_chain(segments.front().anchor, std::move(elements), plane_origin);
}

}  // namespace railloc::maps
