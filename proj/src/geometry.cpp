#include "railloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "railloc/errors.hpp"

namespace railloc::geom {

namespace {

bool finite(double v) { return std::isfinite(v); }

// 12-point Gauss-Legendre nodes/weights on [-1, 1] (positive half; symmetric).
constexpr double kGlNode[6] = {
    0.1252334085114689, 0.3678314989981802, 0.5873179542866175,
    0.7699026741943047, 0.9041172563704749, 0.9815606342467192};
constexpr double kGlWeight[6] = {
    0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
    0.1600783285433462, 0.1069393259953184, 0.0471753363865118};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

// Integrand position increment: integral of (cos psi(u), sin psi(u)) du over
// [a, b], with psi(u) = psi0 + k0*u + q*u^2 measured from the element start.
Vec2 gl12(double psi0, double k0, double q, double a, double b) {
  const double h = 0.5 * (b - a);
  const double m = 0.5 * (a + b);
  Vec2 acc;
  for (int i = 0; i < 6; ++i) {
    for (double sgn : {-1.0, 1.0}) {
      const double u = m + sgn * h * kGlNode[i];
      const double psi = psi0 + (k0 + q * u) * u;
      acc.x += kGlWeight[i] * std::cos(psi);
      acc.y += kGlWeight[i] * std::sin(psi);
    }
  }
  acc.x *= h;
  acc.y *= h;
  return acc;
}

Vec2 integrate_adaptive(double psi0, double k0, double q, double a, double b,
                        double tol, int depth) {
  const Vec2 whole = gl12(psi0, k0, q, a, b);
  const double m = 0.5 * (a + b);
  const Vec2 left = gl12(psi0, k0, q, a, m);
  const Vec2 right = gl12(psi0, k0, q, m, b);
  const double ex = left.x + right.x - whole.x;
  const double ey = left.y + right.y - whole.y;
  if (depth >= 30 || std::hypot(ex, ey) < tol) {
    return {left.x + right.x, left.y + right.y};
  }
  const Vec2 l = integrate_adaptive(psi0, k0, q, a, m, 0.5 * tol, depth + 1);
  const Vec2 r = integrate_adaptive(psi0, k0, q, m, b, 0.5 * tol, depth + 1);
  return {l.x + r.x, l.y + r.y};
}

constexpr double kQuadTol = 1e-10;  // m, absolute
constexpr double kCurvEps = 1e-12;  // below this an arc is numerically straight

}  // namespace

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

const char* shape_token(Shape s) {
  switch (s) {
    case Shape::kStraight: return "st";
    case Shape::kTransitionalArc: return "ta";
    case Shape::kCircularArc: return "ca";
  }
  return "?";
}

TrackElement make_straight(double length) {
  TrackElement e{Shape::kStraight, length, 0.0, 0.0};
  validate_element(e);
  return e;
}

TrackElement make_arc(double length, double kappa) {
  TrackElement e{Shape::kCircularArc, length, kappa, kappa};
  validate_element(e);
  return e;
}

TrackElement make_clothoid(double length, double kappa0, double kappa1) {
  TrackElement e{Shape::kTransitionalArc, length, kappa0, kappa1};
  validate_element(e);
  return e;
}

void validate_element(const TrackElement& e) {
  if (!finite(e.length) || !finite(e.kappa0) || !finite(e.kappa1)) {
    throw DomainError("track element has non-finite parameters");
  }
  if (e.length <= 0.0) {
    throw DomainError("track element length must be > 0, got " +
                      std::to_string(e.length));
  }
  switch (e.shape) {
    case Shape::kStraight:
      if (e.kappa0 != 0.0 || e.kappa1 != 0.0) {
        throw DomainError("straight element must have zero curvature");
      }
      break;
    case Shape::kCircularArc:
      if (e.kappa0 != e.kappa1 || e.kappa0 == 0.0) {
        throw DomainError("circular arc needs equal nonzero end curvatures");
      }
      break;
    case Shape::kTransitionalArc:
      break;
  }
}

double element_curvature_at(const TrackElement& e, double s) {
  return e.kappa0 + (e.kappa1 - e.kappa0) * (s / e.length);
}

double element_heading_at(double start_heading, const TrackElement& e, double s) {
  const double q = (e.kappa1 - e.kappa0) / (2.0 * e.length);
  return start_heading + (e.kappa0 + q * s) * s;
}

Pose2 element_pose_at(const Pose2& start, const TrackElement& e, double s) {
  validate_element(e);
  if (!finite(s) || !finite(start.x) || !finite(start.y) || !finite(start.heading)) {
    throw DomainError("element_pose_at: non-finite input");
  }
  if (s < 0.0 || s > e.length) {
    throw DomainError("element_pose_at: arclength " + std::to_string(s) +
                      " outside [0, " + std::to_string(e.length) + "]");
  }

  Pose2 out;
  const double psi0 = start.heading;
  if (e.shape == Shape::kStraight ||
      (e.kappa0 == e.kappa1 && std::abs(e.kappa0) < kCurvEps)) {
    out.x = start.x + s * std::cos(psi0);
    out.y = start.y + s * std::sin(psi0);
    out.heading = psi0;
    out.curvature = 0.0;
  } else if (e.kappa0 == e.kappa1) {
    const double k = e.kappa0;
    const double psi = psi0 + k * s;
    out.x = start.x + (std::sin(psi) - std::sin(psi0)) / k;
    out.y = start.y - (std::cos(psi) - std::cos(psi0)) / k;
    out.heading = psi;
    out.curvature = k;
  } else {
    const double q = (e.kappa1 - e.kappa0) / (2.0 * e.length);
    const Vec2 d = integrate_adaptive(psi0, e.kappa0, q, 0.0, s, kQuadTol, 0);
    out.x = start.x + d.x;
    out.y = start.y + d.y;
    out.heading = psi0 + (e.kappa0 + q * s) * s;
    out.curvature = element_curvature_at(e, s);
  }
  out.heading = wrap_angle(out.heading);
  return out;
}

TrackElement element_tail(const TrackElement& e, double s) {
  validate_element(e);
  if (s < 0.0 || s >= e.length) {
    throw DomainError("element_tail: cut point outside (0, length)");
  }
  TrackElement tail = e;
  tail.length = e.length - s;
  tail.kappa0 = element_curvature_at(e, s);
  return tail;
}

ElementChain::ElementChain(const Pose2& start, std::vector<TrackElement> elements)
    : start_(start), elements_(std::move(elements)) {
  if (elements_.empty()) {
    throw DomainError("element chain must be nonempty");
  }
  starts_.reserve(elements_.size() + 1);
  cumlen_.reserve(elements_.size() + 1);
  starts_.push_back(start_);
  cumlen_.push_back(0.0);
  for (const auto& e : elements_) {
    validate_element(e);
    starts_.push_back(element_pose_at(starts_.back(), e, e.length));
    cumlen_.push_back(cumlen_.back() + e.length);
  }

  bound_cx_.resize(elements_.size());
  bound_cy_.resize(elements_.size());
  bound_r_.resize(elements_.size());
  seeds_.resize(elements_.size());
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    const auto& e = elements_[i];
    const Pose2& a = starts_[i];
    const Pose2& b = starts_[i + 1];
    bound_cx_[i] = 0.5 * (a.x + b.x);
    bound_cy_[i] = 0.5 * (a.y + b.y);
    // Chord midpoint plus half the arclength always encloses the element.
    bound_r_[i] = 0.5 * std::hypot(b.x - a.x, b.y - a.y) + 0.5 * e.length;

    if (e.shape == Shape::kTransitionalArc &&
        !(e.kappa0 == e.kappa1)) {  // degenerate ta handled by closed forms
      const double kmax = std::max(std::abs(e.kappa0), std::abs(e.kappa1));
      double step = (kmax > kCurvEps) ? 0.3 / kmax : e.length;
      step = std::clamp(step, 0.25, 8.0);
      const int n = std::max(2, static_cast<int>(std::ceil(e.length / step)) + 1);
      auto& cache = seeds_[i];
      cache.step = e.length / (n - 1);
      cache.sx.resize(n);
      cache.sy.resize(n);
      cache.sx[0] = a.x;
      cache.sy[0] = a.y;
      const double q = (e.kappa1 - e.kappa0) / (2.0 * e.length);
      for (int k = 1; k < n; ++k) {
        const Vec2 d =
            gl12(a.heading, e.kappa0, q, (k - 1) * cache.step, k * cache.step);
        cache.sx[k] = cache.sx[k - 1] + d.x;
        cache.sy[k] = cache.sy[k - 1] + d.y;
      }
    }
  }
}

Pose2 ElementChain::pose_at(double s) const {
  if (s < 0.0 || s > total_length() + 1e-9) {
    throw DomainError("chain pose_at: arclength outside chain");
  }
  s = std::min(s, total_length());
  auto it = std::upper_bound(cumlen_.begin(), cumlen_.end(), s);
  std::size_t i = (it == cumlen_.begin()) ? 0 : (it - cumlen_.begin() - 1);
  i = std::min(i, elements_.size() - 1);
  return element_pose_at(starts_[i], elements_[i], s - cumlen_[i]);
}

namespace {

double signed_dist(const Pose2& foot, double px, double py) {
  const double ox = px - foot.x;
  const double oy = py - foot.y;
  const double cross = std::cos(foot.heading) * oy - std::sin(foot.heading) * ox;
  const double d = std::hypot(ox, oy);
  return cross >= 0.0 ? d : -d;
}

}  // namespace

Pose2 ElementChain::cached_clothoid_pose(std::size_t i, double s) const {
  const TrackElement& e = elements_[i];
  const SeedCache& c = seeds_[i];
  const int n = static_cast<int>(c.sx.size());
  int k = std::clamp(static_cast<int>(s / c.step), 0, n - 1);
  const double s_node = k * c.step;
  const double q = (e.kappa1 - e.kappa0) / (2.0 * e.length);
  const Vec2 d = gl12(starts_[i].heading, e.kappa0, q, s_node, s);
  Pose2 p;
  p.x = c.sx[k] + d.x;
  p.y = c.sy[k] + d.y;
  p.heading = wrap_angle(element_heading_at(starts_[i].heading, e, s));
  p.curvature = element_curvature_at(e, s);
  return p;
}

Projection ElementChain::project_element(std::size_t i, double px, double py,
                                         double prune_abs) const {
  const TrackElement& e = elements_[i];
  const Pose2& a = starts_[i];
  Projection best;
  best.element_index = i;

  const bool clothoid_path =
      e.shape == Shape::kTransitionalArc && !(e.kappa0 == e.kappa1);
  auto finish = [&](double s) {
    s = std::clamp(s, 0.0, e.length);
    Projection p;
    p.element_index = i;
    p.arclength = s;
    p.foot = clothoid_path ? cached_clothoid_pose(i, s) : element_pose_at(a, e, s);
    p.signed_distance = signed_dist(p.foot, px, py);
    return p;
  };

  if (e.shape == Shape::kStraight ||
      (e.kappa0 == e.kappa1 && std::abs(e.kappa0) < kCurvEps)) {
    const double tx = std::cos(a.heading), ty = std::sin(a.heading);
    const double t = (px - a.x) * tx + (py - a.y) * ty;
    return finish(t);
  }

  if (e.kappa0 == e.kappa1) {
    const double k = e.kappa0;
    const double cx = a.x - std::sin(a.heading) / k;
    const double cy = a.y + std::cos(a.heading) / k;
    const double alpha0 = std::atan2(a.y - cy, a.x - cx);
    const double alphaq = std::atan2(py - cy, px - cx);
    // Interior candidates: alpha0 + k*s == alphaq (mod 2pi).
    best = finish(0.0);
    const double turn = std::abs(k) * e.length;
    double rel = wrap_angle(alphaq - alpha0);
    for (double cand = rel / k; cand <= e.length + 2.0 * kPi / std::abs(k);
         cand += 2.0 * kPi / std::abs(k)) {
      if (cand >= 0.0 && cand <= e.length) {
        Projection p = finish(cand);
        if (std::abs(p.signed_distance) < std::abs(best.signed_distance)) best = p;
      }
    }
    // A full wrap backwards can only matter for turns beyond 2pi.
    if (turn > 2.0 * kPi) {
      double cand = rel / k - 2.0 * kPi / std::abs(k) * std::ceil(turn / (2.0 * kPi));
      for (; cand <= e.length; cand += 2.0 * kPi / std::abs(k)) {
        if (cand >= 0.0) {
          Projection p = finish(cand);
          if (std::abs(p.signed_distance) < std::abs(best.signed_distance)) best = p;
        }
      }
    }
    Projection tail = finish(e.length);
    if (std::abs(tail.signed_distance) < std::abs(best.signed_distance)) best = tail;
    return best;
  }

  // Clothoid: seed from the cached coarse samples, then Newton on
  // f(s) = (P(s) - q) . T(s), f'(s) = 1 + kappa(s) * ((P(s) - q) . N(s)).
  const SeedCache& cache = seeds_[i];
  const int n = static_cast<int>(cache.sx.size());
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_k = 0;
  for (int k = 0; k < n; ++k) {
    const double dx = px - cache.sx[k];
    const double dy = py - cache.sy[k];
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best_k = k;
    }
  }
  // The true foot lies within half a node interval of the sampled winner;
  // skip the Newton polish when this element cannot beat the running best.
  if (std::sqrt(best_d2) - 0.51 * cache.step > prune_abs) {
    best.arclength = std::min(e.length, best_k * cache.step);
    best.signed_distance = std::sqrt(best_d2);
    best.foot = cached_clothoid_pose(i, best.arclength);
    return best;
  }

  auto refine = [&](double s) {
    double lo = std::max(0.0, s - cache.step);
    double hi = std::min(e.length, s + cache.step);
    for (int iter = 0; iter < 40; ++iter) {
      const Pose2 p = cached_clothoid_pose(i, s);
      const double tx = std::cos(p.heading), ty = std::sin(p.heading);
      const double ox = px - p.x, oy = py - p.y;
      const double f = -(ox * tx + oy * ty);  // d/ds of half distance^2
      const double fp = 1.0 + p.curvature * (-(oy * tx - ox * ty));
      if (f > 0.0) hi = s; else lo = s;
      double next = (std::abs(fp) > 1e-12) ? s - f / fp : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - s) < 1e-12 * std::max(1.0, e.length)) {
        s = next;
        break;
      }
      s = next;
    }
    return std::clamp(s, 0.0, e.length);
  };

  best = finish(refine(std::min(e.length, best_k * cache.step)));
  // Neighboring local minima can beat the sampled winner near curvature sign
  // changes; check the adjacent sampled basins too.
  for (int k = std::max(0, best_k - 1); k <= std::min(n - 1, best_k + 1); ++k) {
    if (k == best_k) continue;
    Projection p = finish(refine(std::min(e.length, k * cache.step)));
    if (std::abs(p.signed_distance) < std::abs(best.signed_distance)) best = p;
  }
  for (double s_end : {0.0, e.length}) {
    Projection p = finish(s_end);
    if (std::abs(p.signed_distance) < std::abs(best.signed_distance)) best = p;
  }
  return best;
}

Projection ElementChain::project(double px, double py) const {
  if (!finite(px) || !finite(py)) {
    throw DomainError("project: non-finite query point");
  }
  // Visit elements by ascending distance lower bound so the running best
  // prunes almost everything on long chains. Ties in the final distance are
  // broken toward the smaller cumulative arclength.
  const std::size_t n = elements_.size();
  std::vector<std::pair<double, std::size_t>> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = {std::hypot(px - bound_cx_[i], py - bound_cy_[i]) - bound_r_[i], i};
  }
  std::sort(order.begin(), order.end());

  Projection best;
  bool have = false;
  double best_abs = std::numeric_limits<double>::infinity();
  for (const auto& [bound, i] : order) {
    if (have && bound > best_abs) break;
    Projection p = project_element(i, px, py, have ? best_abs : 1e300);
    const double pa = std::abs(p.signed_distance);
    const double tol = 1e-12 * (1.0 + pa);
    bool take = false;
    if (!have || pa < best_abs - tol) {
      take = true;
    } else if (pa <= best_abs + tol) {
      const double cum_new = cumlen_[i] + p.arclength;
      const double cum_old = cumlen_[best.element_index] + best.arclength;
      take = cum_new < cum_old - 1e-9;
    }
    if (take) {
      best = p;
      best_abs = pa;
      have = true;
    }
  }
  best.chain_arclength = cumlen_[best.element_index] + best.arclength;
  return best;
}

Projection project_point(const Pose2& chain_start,
                         const std::vector<TrackElement>& elements,
                         double px, double py) {
  if (elements.empty()) {
    throw DomainError("project_point: empty element chain");
  }
  return ElementChain(chain_start, elements).project(px, py);
}

}  // namespace railloc::geom
