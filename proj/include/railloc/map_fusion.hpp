#pragma once

#include <limits>

#include "railloc/geometry.hpp"
#include "railloc/kalman.hpp"

namespace railloc::fuse {

struct FusedPosition {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double cov_xx = 0.0;
  double cov_xy = 0.0;
  double cov_yy = 0.0;
  double along_track_s = std::numeric_limits<double>::quiet_NaN();
  bool map_constrained = false;
};

struct MapFusionOptions {
  double map_sigma = 0.5;     // m, cross-track trust in the map
  double gate_extra = 20.0;   // m added to 3x the cross-track 3-sigma gate
};

// Projects the state position onto the map chain and applies the track
// centerline as a cross-track d = 0 measurement with variance map_sigma^2.
// Only the cross-track component of the position (and covariance) changes;
// the along-track component passes through. States beyond the gating
// distance pass through unconstrained.
FusedPosition fuse_with_map(double t, const filters::KinematicState& state,
                            const geom::ElementChain* chain,
                            const MapFusionOptions& opts);

}  // namespace railloc::fuse
