#pragma once

#include <string>
#include <vector>

#include "railloc/errors.hpp"
#include "railloc/imm.hpp"
#include "railloc/track_map.hpp"

namespace railloc::filters {

struct GeometryEvent {
  enum class Kind { kEnterStraight, kEnterArc, kEnterUnknown };
  Kind kind = Kind::kEnterUnknown;
  double t = 0.0;        // segment open time
  double t_close = 0.0;  // segment end time
};

// Per-GNSS-epoch model-probability record, the classifier's input.
struct EpochProbabilities {
  double t = 0.0;
  double mu_straight = 0.0;
  double mu_arc = 0.0;
  double mu_free = 0.0;
  double omega = 0.0;      // fused yaw-rate estimate
  double omega_var = 0.0;  // its variance
};

struct ClassifyOptions {
  double open_threshold = 0.9;   // mu above this ...
  int open_epochs = 3;           // ... for this many consecutive epochs opens
  double close_threshold = 0.5;  // mu below this closes
  // Back-to-back arcs: a level shift of the arc yaw rate by more than
  // 3 sigma for `shift_epochs` epochs splits the segment.
  int shift_epochs = 2;
};

// Hysteresis segmentation of the model-probability history.
std::vector<GeometryEvent> classify_segments(const std::vector<EpochProbabilities>& history,
                                             const ClassifyOptions& opts = {});

struct StateSnapshot {
  double t = 0.0;
  KinematicState state;
};

// Near-collinear circle fits and other unidentifiable geometry.
struct DegenerateFitError : DomainError {
  explicit DegenerateFitError(const std::string& msg) : DomainError(msg) {}
};

// Weighted total-least-squares line through the state positions; anchor is
// the first point's perpendicular projection, heading aligned with travel.
maps::IdentifiedSegment fit_straight_params(const std::vector<StateSnapshot>& states);

// Geometric circle fit (Gauss-Newton on center/radius, seeded by the
// algebraic fit). Throws DegenerateFitError when the algebraic radius
// exceeds 100 km.
maps::IdentifiedSegment fit_arc_params(const std::vector<StateSnapshot>& states);

}  // namespace railloc::filters
