#include "railloc/segments.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "railloc/errors.hpp"

namespace railloc::filters {

using geom::Pose2;
using geom::Shape;
using maps::IdentifiedSegment;

std::vector<GeometryEvent> classify_segments(const std::vector<EpochProbabilities>& history,
                                             const ClassifyOptions& opts) {
  std::vector<GeometryEvent> events;
  if (history.empty()) return events;

  int open_model = -1;          // 0 straight, 1 arc, 2 free
  double open_t = 0.0;
  int streak_model = -1;
  int streak_count = 0;
  double streak_t0 = 0.0;

  // Arc level tracking for the back-to-back split rule.
  double level_sum = 0.0;
  long level_n = 0;
  int shift_count = 0;
  double shift_t0 = 0.0;

  auto kind_of = [](int m) {
    switch (m) {
      case 0: return GeometryEvent::Kind::kEnterStraight;
      case 1: return GeometryEvent::Kind::kEnterArc;
      default: return GeometryEvent::Kind::kEnterUnknown;
    }
  };

  auto mu_of = [](const EpochProbabilities& e, int m) {
    return m == 0 ? e.mu_straight : (m == 1 ? e.mu_arc : e.mu_free);
  };

  for (const auto& ep : history) {
    if (open_model >= 0) {
      if (mu_of(ep, open_model) < opts.close_threshold) {
        events.push_back({kind_of(open_model), open_t, ep.t});
        open_model = -1;
        streak_model = -1;
        streak_count = 0;
        // The winning model may immediately start a new streak this epoch.
      } else if (open_model == 1) {
        const double level = level_n > 0 ? level_sum / static_cast<double>(level_n) : ep.omega;
        const double sigma = std::sqrt(std::max(ep.omega_var, 1e-12));
        if (level_n > 0 && std::abs(ep.omega - level) > 3.0 * sigma) {
          if (shift_count == 0) shift_t0 = ep.t;
          ++shift_count;
          if (shift_count >= opts.shift_epochs) {
            // Same-direction arc with a new radius: close and reopen.
            events.push_back({GeometryEvent::Kind::kEnterArc, open_t, shift_t0});
            open_t = shift_t0;
            level_sum = ep.omega;
            level_n = 1;
            shift_count = 0;
          }
        } else {
          shift_count = 0;
          level_sum += ep.omega;
          ++level_n;
        }
        continue;
      } else {
        continue;
      }
    }

    // No open segment: look for an opening streak.
    int best = 0;
    double best_mu = ep.mu_straight;
    if (ep.mu_arc > best_mu) { best = 1; best_mu = ep.mu_arc; }
    if (ep.mu_free > best_mu) { best = 2; best_mu = ep.mu_free; }
    if (best_mu > opts.open_threshold) {
      if (streak_model == best) {
        ++streak_count;
      } else {
        streak_model = best;
        streak_count = 1;
        streak_t0 = ep.t;
      }
      if (streak_count >= opts.open_epochs) {
        open_model = best;
        open_t = streak_t0;
        streak_model = -1;
        streak_count = 0;
        level_sum = (best == 1) ? ep.omega : 0.0;
        level_n = (best == 1) ? 1 : 0;
        shift_count = 0;
      }
    } else {
      streak_model = -1;
      streak_count = 0;
    }
  }

  if (open_model >= 0) {
    events.push_back({kind_of(open_model), open_t, history.back().t});
  }
  return events;
}

namespace {

double position_weight(const KinematicState& st) {
  const double tr = st.cov(kX, kX) + st.cov(kY, kY);
  return 1.0 / std::max(tr, 1e-9);
}

}  // namespace

IdentifiedSegment fit_straight_params(const std::vector<StateSnapshot>& states) {
  if (states.size() < 3) {
    throw DomainError("fit_straight_params: need at least 3 states, got " +
                      std::to_string(states.size()));
  }
  double sw = 0.0, cx = 0.0, cy = 0.0;
  for (const auto& s : states) {
    const double w = position_weight(s.state);
    sw += w;
    cx += w * s.state.x();
    cy += w * s.state.y();
  }
  cx /= sw;
  cy /= sw;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& s : states) {
    const double w = position_weight(s.state);
    const double dx = s.state.x() - cx;
    const double dy = s.state.y() - cy;
    sxx += w * dx * dx;
    sxy += w * dx * dy;
    syy += w * dy * dy;
  }
  // Principal axis of the weighted scatter matrix.
  double heading = 0.5 * std::atan2(2.0 * sxy, sxx - syy);

  const double tx = states.back().state.x() - states.front().state.x();
  const double ty = states.back().state.y() - states.front().state.y();
  if (tx * std::cos(heading) + ty * std::sin(heading) < 0.0) {
    heading = geom::wrap_angle(heading + geom::kPi);
  }

  const double dx0 = states.front().state.x() - cx;
  const double dy0 = states.front().state.y() - cy;
  const double t0 = dx0 * std::cos(heading) + dy0 * std::sin(heading);
  Pose2 anchor;
  anchor.x = cx + t0 * std::cos(heading);
  anchor.y = cy + t0 * std::sin(heading);
  anchor.heading = heading;
  anchor.curvature = 0.0;

  double t_max = 0.0;
  double res2 = 0.0;
  for (const auto& s : states) {
    const double w = position_weight(s.state);
    const double dx = s.state.x() - anchor.x;
    const double dy = s.state.y() - anchor.y;
    t_max = std::max(t_max, dx * std::cos(heading) + dy * std::sin(heading));
    const double d = -dx * std::sin(heading) + dy * std::cos(heading);
    res2 += w * d * d;
  }
  if (t_max <= 0.0) {
    throw DomainError("fit_straight_params: degenerate span");
  }

  IdentifiedSegment seg;
  seg.shape = Shape::kStraight;
  seg.start_time = states.front().t;
  seg.end_time = states.back().t;
  seg.anchor = anchor;
  seg.length = t_max;
  seg.curvature = 0.0;
  seg.fit_rms = std::sqrt(res2 / sw);
  return seg;
}

IdentifiedSegment fit_arc_params(const std::vector<StateSnapshot>& states) {
  if (states.size() < 3) {
    throw DomainError("fit_arc_params: need at least 3 states, got " +
                      std::to_string(states.size()));
  }

  // Algebraic (Kaasa) seed: x^2 + y^2 = 2 a x + 2 b y + c.
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (const auto& s : states) {
    const double w = position_weight(s.state);
    const double x = s.state.x(), y = s.state.y();
    Eigen::Vector3d row(2.0 * x, 2.0 * y, 1.0);
    ata += w * row * row.transpose();
    atb += w * row * (x * x + y * y);
  }
  const Eigen::Vector3d abc = ata.ldlt().solve(atb);
  double ca = abc(0), cb = abc(1);
  double r2 = abc(2) + ca * ca + cb * cb;
  if (!std::isfinite(r2) || r2 <= 0.0) {
    throw DegenerateFitError("fit_arc_params: algebraic fit failed (collinear states)");
  }
  double radius = std::sqrt(r2);
  if (radius > 1.0e5) {
    throw DegenerateFitError("fit_arc_params: radius " + std::to_string(radius) +
                             " m exceeds 100 km (near-collinear)");
  }

  // Gauss-Newton refinement of (center, radius) on the geometric residuals.
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (const auto& s : states) {
      const double w = position_weight(s.state);
      const double dx = s.state.x() - ca;
      const double dy = s.state.y() - cb;
      const double d = std::hypot(dx, dy);
      if (d < 1e-9) continue;
      const Eigen::Vector3d jrow(-dx / d, -dy / d, -1.0);
      const double res = d - radius;
      jtj += w * jrow * jrow.transpose();
      jtr += w * jrow * res;
    }
    const Eigen::Vector3d delta = jtj.ldlt().solve(-jtr);
    ca += delta(0);
    cb += delta(1);
    radius += delta(2);
    if (!std::isfinite(radius) || radius <= 0.0) {
      throw DegenerateFitError("fit_arc_params: refinement diverged");
    }
    if (delta.cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, radius)) break;
  }
  if (radius > 1.0e5) {
    throw DegenerateFitError("fit_arc_params: refined radius exceeds 100 km");
  }

  // Curvature sign: positive when the center lies left of the travel chord.
  const double chord_x = states.back().state.x() - states.front().state.x();
  const double chord_y = states.back().state.y() - states.front().state.y();
  const double side = chord_x * (cb - states.front().state.y()) -
                      chord_y * (ca - states.front().state.x());
  const double kappa = (side >= 0.0 ? 1.0 : -1.0) / radius;

  // Accumulated sweep between the first and last projections.
  double sweep = 0.0;
  double prev = std::atan2(states.front().state.y() - cb, states.front().state.x() - ca);
  double res2 = 0.0, sw = 0.0;
  for (const auto& s : states) {
    const double ang = std::atan2(s.state.y() - cb, s.state.x() - ca);
    sweep += geom::wrap_angle(ang - prev);
    prev = ang;
    const double w = position_weight(s.state);
    res2 += w * std::pow(std::hypot(s.state.x() - ca, s.state.y() - cb) - radius, 2);
    sw += w;
  }

  const double dx0 = states.front().state.x() - ca;
  const double dy0 = states.front().state.y() - cb;
  const double d0 = std::hypot(dx0, dy0);
  const double ux = dx0 / d0, uy = dy0 / d0;
  Pose2 anchor;
  anchor.x = ca + radius * ux;
  anchor.y = cb + radius * uy;
  anchor.heading = (kappa > 0.0) ? std::atan2(ux, -uy) : std::atan2(-ux, uy);
  anchor.curvature = kappa;

  IdentifiedSegment seg;
  seg.shape = Shape::kCircularArc;
  seg.start_time = states.front().t;
  seg.end_time = states.back().t;
  seg.anchor = anchor;
  seg.length = std::abs(sweep) * radius;
  if (seg.length <= 0.0) {
    throw DegenerateFitError("fit_arc_params: zero arc sweep");
  }
  seg.curvature = kappa;
  seg.fit_rms = std::sqrt(res2 / sw);
  return seg;
}

}  // namespace railloc::filters
