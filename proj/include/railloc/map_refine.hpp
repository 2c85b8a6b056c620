#pragma once

#include <vector>

#include "railloc/track_map.hpp"

namespace railloc::maps {

struct TracePoint {
  double x = 0.0;
  double y = 0.0;
  double weight = 1.0;  // typically 1 / (cross-track 3sigma)^2
};

struct RefineOptions {
  int max_iterations = 200;
  double rel_tolerance = 1e-9;
  double objective_floor = 1e-12;  // m^2; below this the fit counts as exact
  // Hold p0 and psi0 fixed; used to re-fit after quantizing the anchor to
  // the file format's printed precision.
  bool freeze_anchor = false;
  double min_element_length = 0.1;  // m; shorter elements get merged away
  // The chain-boundary lengths are unobservable beyond the data extent
  // (the chain may overhang freely), so the refined chain is trimmed to the
  // projection span of the first/last trace points.
  bool trim_to_trace = true;
};

struct RefineResult {
  TrackMap map;
  std::vector<double> objective_history;  // objective per accepted iteration,
                                          // starting with the initial value
  double weighted_rms = 0.0;              // sqrt(F / sum w), m
  int merged_elements = 0;
  int iterations = 0;
};

// Levenberg-Marquardt fit of all free chain parameters (p0, psi0, element
// lengths, joint curvatures) to weighted trace positions, minimizing the sum
// of squared perpendicular distances. Continuity is structural: the chain is
// re-integrated from the parameter vector, so G1 and curvature continuity
// can never be violated by a step.
RefineResult refine_map(const TrackMap& map, const std::vector<TracePoint>& trace,
                        const geom::GeoPoint& plane_origin,
                        const RefineOptions& opts = {});

}  // namespace railloc::maps
