#pragma once

#include <cstddef>
#include <vector>

namespace railloc::geom {

inline constexpr double kPi = 3.14159265358979323846;

// Normalize an angle to (-pi, pi].
double wrap_angle(double a);

// Planar pose on the track. Heading is CCW from local east, curvature is
// signed with left turns positive.
struct Pose2 {
  double x = 0.0;         // m, local east
  double y = 0.0;         // m, local north
  double heading = 0.0;   // rad, (-pi, pi]
  double curvature = 0.0; // 1/m
};

enum class Shape { kStraight, kTransitionalArc, kCircularArc };

const char* shape_token(Shape s);  // "st" / "ta" / "ca"

// One geometric track element. Curvature varies linearly from kappa0 at
// s = 0 to kappa1 at s = length; straights and circular arcs are the
// constant special cases.
struct TrackElement {
  Shape shape = Shape::kStraight;
  double length = 0.0;  // m, > 0
  double kappa0 = 0.0;  // 1/m
  double kappa1 = 0.0;  // 1/m
};

TrackElement make_straight(double length);
TrackElement make_arc(double length, double kappa);
TrackElement make_clothoid(double length, double kappa0, double kappa1);

// Throws DomainError if the element violates its shape invariants.
void validate_element(const TrackElement& e);

double element_curvature_at(const TrackElement& e, double s);

// Unwrapped heading at arclength s; psi(s) = psi0 + kappa0*s + (kappa1-kappa0)*s^2/(2L).
double element_heading_at(double start_heading, const TrackElement& e, double s);

// Pose at arclength s in [0, length]. Straights and circular arcs use the
// closed form, clothoids adaptive quadrature of the heading integral
// (absolute tolerance 1e-10 m).
Pose2 element_pose_at(const Pose2& start, const TrackElement& e, double s);

// Remaining part of an element after cutting the first s meters.
TrackElement element_tail(const TrackElement& e, double s);

struct Projection {
  std::size_t element_index = 0;
  double arclength = 0.0;        // s* within the element, [0, L]
  double chain_arclength = 0.0;  // cumulative s* from chain start
  double signed_distance = 0.0;  // m, positive left of travel
  Pose2 foot;
};

// Immutable element chain anchored at a start pose. Caches element start
// poses and coarse clothoid samples so repeated projections are cheap.
class ElementChain {
 public:
  ElementChain(const Pose2& start, std::vector<TrackElement> elements);

  const Pose2& start() const { return start_; }
  const std::vector<TrackElement>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  const Pose2& element_start(std::size_t i) const { return starts_[i]; }
  const Pose2& end() const { return starts_.back(); }
  double total_length() const { return cumlen_.back(); }
  double cumulative_length(std::size_t i) const { return cumlen_[i]; }

  // Pose at chain arclength s in [0, total_length].
  Pose2 pose_at(double s) const;

  // Global minimum-distance projection; ties broken toward the smallest
  // cumulative arclength.
  Projection project(double px, double py) const;

 private:
  struct SeedCache {
    double step = 0.0;
    std::vector<double> sx, sy;  // sampled positions every `step` meters
  };

  // Pose inside clothoid element i from the cached node grid (single
  // fixed-order quadrature over at most one node interval).
  Pose2 cached_clothoid_pose(std::size_t i, double s) const;
  Projection project_element(std::size_t i, double px, double py,
                             double prune_abs) const;

  Pose2 start_;
  std::vector<TrackElement> elements_;
  std::vector<Pose2> starts_;   // size n+1, includes chain end pose
  std::vector<double> cumlen_;  // size n+1
  std::vector<double> bound_cx_, bound_cy_, bound_r_;  // per-element bounding circles
  std::vector<SeedCache> seeds_;  // clothoid elements only (empty otherwise)
};

// One-shot convenience wrapper over ElementChain::project.
Projection project_point(const Pose2& chain_start,
                         const std::vector<TrackElement>& elements,
                         double px, double py);

}  // namespace railloc::geom
