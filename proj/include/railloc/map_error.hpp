#pragma once

#include <map>
#include <vector>

#include "railloc/track_map.hpp"

namespace railloc::maps {

struct MapErrorStats {
  std::vector<double> samples;          // |epsilon| per 1 m arclength sample
  double mean = 0.0;                    // m
  std::map<double, double> quantiles;   // probability -> m (nearest rank)
  double max = 0.0;                     // m
};

// Samples the map every 1 m of arclength and measures the absolute
// perpendicular distance to the reference polyline (segment-wise
// projection). Throws DomainError when the geometries are disjoint
// (closest approach > 1 km) or the reference has < 2 points.
MapErrorStats map_error_cdf(const TrackMap& map,
                            const std::vector<geom::GeoPoint>& reference);

// Same computation against a reference already expressed in the map's own
// plane (used when the reference is a locally generated ground truth).
MapErrorStats map_error_cdf_local(const TrackMap& map,
                                  const std::vector<geom::LocalXY>& reference_xy);

// Stats (mean, nearest-rank quantiles, max) over a raw |epsilon| sample list.
MapErrorStats map_error_stats_from_samples(std::vector<double> samples);

}  // namespace railloc::maps
