#include "railloc/map_refine.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "railloc/errors.hpp"

namespace railloc::maps {

using geom::ElementChain;
using geom::Pose2;
using geom::Shape;
using geom::TrackElement;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Free parameters of a chain with fixed shapes: optional (x0, y0, psi0),
// one length per element, one curvature per circular arc, plus the start
// (end) curvature of a transitional arc sitting at the chain boundary.
struct Parameterization {
  std::vector<Shape> shapes;
  bool free_anchor = true;
  Pose2 fixed_start;  // used when !free_anchor

  std::vector<int> length_index;         // per element
  std::vector<int> curvature_index;      // per element: ca's own param, else -1
  int first_ta_kappa0 = -1;              // param index, -1 if unused
  int last_ta_kappa1 = -1;
  int n_params = 0;

  static Parameterization build(const Pose2& start,
                                const std::vector<TrackElement>& elements,
                                bool freeze_anchor) {
    Parameterization p;
    p.free_anchor = !freeze_anchor;
    p.fixed_start = start;
    const int n = static_cast<int>(elements.size());
    p.shapes.resize(n);
    p.length_index.resize(n);
    p.curvature_index.assign(n, -1);
    int idx = p.free_anchor ? 3 : 0;
    for (int i = 0; i < n; ++i) {
      p.shapes[i] = elements[i].shape;
      if (i > 0 && p.shapes[i] == Shape::kTransitionalArc &&
          p.shapes[i - 1] == Shape::kTransitionalArc) {
        throw DomainError("refine_map: consecutive transitional arcs unsupported");
      }
      p.length_index[i] = idx++;
    }
    for (int i = 0; i < n; ++i) {
      if (p.shapes[i] == Shape::kCircularArc) p.curvature_index[i] = idx++;
    }
    if (p.shapes.front() == Shape::kTransitionalArc) p.first_ta_kappa0 = idx++;
    if (p.shapes.back() == Shape::kTransitionalArc) p.last_ta_kappa1 = idx++;
    p.n_params = idx;
    return p;
  }

  Eigen::VectorXd encode(const Pose2& start,
                         const std::vector<TrackElement>& elements) const {
    Eigen::VectorXd theta(n_params);
    if (free_anchor) {
      theta(0) = start.x;
      theta(1) = start.y;
      theta(2) = start.heading;
    }
    const int n = static_cast<int>(elements.size());
    for (int i = 0; i < n; ++i) {
      theta(length_index[i]) = elements[i].length;
      if (curvature_index[i] >= 0) theta(curvature_index[i]) = elements[i].kappa0;
    }
    if (first_ta_kappa0 >= 0) theta(first_ta_kappa0) = elements.front().kappa0;
    if (last_ta_kappa1 >= 0) theta(last_ta_kappa1) = elements.back().kappa1;
    return theta;
  }

  // Returns false when the decoded chain is invalid (non-positive length).
  bool decode(const Eigen::VectorXd& theta, Pose2& start,
              std::vector<TrackElement>& elements) const {
    const int n = static_cast<int>(shapes.size());
    start = fixed_start;
    if (free_anchor) {
      start.x = theta(0);
      start.y = theta(1);
      start.heading = theta(2);
    }
    elements.assign(n, TrackElement{});
    for (int i = 0; i < n; ++i) {
      elements[i].shape = shapes[i];
      elements[i].length = theta(length_index[i]);
      if (!(elements[i].length > 0.0) || !std::isfinite(elements[i].length)) {
        return false;
      }
      if (shapes[i] == Shape::kCircularArc) {
        const double k = theta(curvature_index[i]);
        if (k == 0.0 || !std::isfinite(k)) return false;
        elements[i].kappa0 = elements[i].kappa1 = k;
      }
    }
    auto boundary_kappa = [&](int i, bool start_side) {
      if (shapes[i] == Shape::kCircularArc) return theta(curvature_index[i]);
      (void)start_side;
      return 0.0;  // straight
    };
    for (int i = 0; i < n; ++i) {
      if (shapes[i] != Shape::kTransitionalArc) continue;
      elements[i].kappa0 =
          (i == 0) ? theta(first_ta_kappa0) : boundary_kappa(i - 1, false);
      elements[i].kappa1 =
          (i == n - 1) ? theta(last_ta_kappa1) : boundary_kappa(i + 1, true);
    }
    start.curvature = elements.front().kappa0;
    return true;
  }

  Eigen::VectorXd step_sizes() const {
    Eigen::VectorXd h(n_params);
    h.setConstant(1e-5);  // lengths / positions, m
    if (free_anchor) h(2) = 1e-7;  // psi0, rad
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      if (curvature_index[i] >= 0) h(curvature_index[i]) = 1e-8;
    }
    if (first_ta_kappa0 >= 0) h(first_ta_kappa0) = 1e-8;
    if (last_ta_kappa1 >= 0) h(last_ta_kappa1) = 1e-8;
    return h;
  }
};

struct Objective {
  const Parameterization* param;
  const std::vector<TracePoint>* trace;
  double min_length_reject;  // trials shrinking below this are rejected (inf)

  // Residuals sqrt(w) * d; objective is their squared norm.
  bool residuals(const Eigen::VectorXd& theta, Eigen::VectorXd& r) const {
    Pose2 start;
    std::vector<TrackElement> elements;
    if (!param->decode(theta, start, elements)) return false;
    for (const auto& e : elements) {
      if (e.length < min_length_reject) return false;
    }
    const ElementChain chain(start, elements);
    const auto& pts = *trace;
    r.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const geom::Projection p = chain.project(pts[i].x, pts[i].y);
      r(static_cast<Eigen::Index>(i)) = std::sqrt(pts[i].weight) * p.signed_distance;
    }
    return true;
  }

  double value(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd r;
    if (!residuals(theta, r)) return kInf;
    return r.squaredNorm();
  }
};

// Cuts the chain to the arclength window spanned by the outermost trace
// projections. No-ops on cuts below 1e-9 m so an exact fixed point stays
// bit-stable.
void trim_chain(Pose2& start, std::vector<TrackElement>& elements,
                const TracePoint& first_pt, const TracePoint& last_pt,
                bool allow_start_trim, double min_length) {
  const ElementChain chain(start, elements);
  const geom::Projection pa = chain.project(first_pt.x, first_pt.y);
  const geom::Projection pb = chain.project(last_pt.x, last_pt.y);
  if (pb.chain_arclength <= pa.chain_arclength) return;  // reversed trace

  // End cut: truncate at the last foot point, or drop elements whose kept
  // piece would be shorter than the minimum.
  if (chain.total_length() - pb.chain_arclength > 1e-9) {
    std::size_t ib = pb.element_index;
    double keep = pb.arclength;
    while (keep < min_length && ib > 0) {
      --ib;
      keep = elements[ib].length;
    }
    elements.resize(ib + 1);
    TrackElement& e = elements.back();
    if (keep < e.length - 1e-9) {
      e.kappa1 = geom::element_curvature_at(e, keep);
      e.length = keep;
      if (e.shape == Shape::kTransitionalArc && e.kappa0 == 0.0 && e.kappa1 == 0.0) {
        e.shape = Shape::kStraight;
      }
    }
  }

  // Start cut.
  if (allow_start_trim && pa.chain_arclength > 1e-9 && !elements.empty()) {
    const ElementChain cur(start, elements);
    std::size_t ia = std::min(pa.element_index, elements.size() - 1);
    double s_in = std::min(pa.arclength, elements[ia].length);
    if (elements[ia].length - s_in < min_length) {
      if (ia + 1 >= elements.size()) return;  // nothing would remain
      ++ia;
      s_in = 0.0;
    }
    std::vector<TrackElement> kept;
    Pose2 new_start;
    if (s_in > 1e-9) {
      new_start = geom::element_pose_at(cur.element_start(ia), elements[ia], s_in);
      kept.push_back(geom::element_tail(elements[ia], s_in));
      if (kept.back().shape == Shape::kTransitionalArc && kept.back().kappa0 == 0.0 &&
          kept.back().kappa1 == 0.0) {
        kept.back().shape = Shape::kStraight;
      }
    } else {
      new_start = cur.element_start(ia);
      kept.push_back(elements[ia]);
    }
    for (std::size_t i = ia + 1; i < elements.size(); ++i) kept.push_back(elements[i]);
    start = new_start;
    start.curvature = kept.front().kappa0;
    elements = std::move(kept);
  }
}

}  // namespace

RefineResult refine_map(const TrackMap& map, const std::vector<TracePoint>& trace,
                        const geom::GeoPoint& plane_origin, const RefineOptions& opts) {
  check_map_invariants(map);
  if (trace.size() < 10) {
    throw DomainError("refine_map: need at least 10 trace points, got " +
                      std::to_string(trace.size()));
  }
  double weight_sum = 0.0;
  for (const auto& t : trace) {
    if (!std::isfinite(t.x) || !std::isfinite(t.y) || !std::isfinite(t.weight) ||
        t.weight <= 0.0) {
      throw DomainError("refine_map: non-finite trace point or non-positive weight");
    }
    weight_sum += t.weight;
  }

  Pose2 start = start_pose_in_plane(map, plane_origin);
  std::vector<TrackElement> elements = map.elements;

  RefineResult result;
  bool merged_once = false;

restart:
  Parameterization param =
      Parameterization::build(start, elements, opts.freeze_anchor);
  Objective obj{&param, &trace,
                merged_once ? opts.min_element_length : 0.0};
  Eigen::VectorXd theta = param.encode(start, elements);
  const Eigen::VectorXd h = param.step_sizes();

  Eigen::VectorXd r;
  if (!obj.residuals(theta, r)) {
    throw NumericalError("refine_map: initial chain is invalid");
  }
  double objective = r.squaredNorm();
  result.objective_history.assign(1, objective);

  double lambda = 1e-4;
  bool converged = objective < opts.objective_floor;
  const Eigen::Index m = r.size();
  Eigen::MatrixXd jac(m, param.n_params);

  while (!converged && result.iterations < opts.max_iterations) {
    // Forward-difference Jacobian.
    Eigen::VectorXd rp;
    for (int j = 0; j < param.n_params; ++j) {
      Eigen::VectorXd tp = theta;
      tp(j) += h(j);
      if (!obj.residuals(tp, rp)) {
        tp(j) = theta(j) - h(j);
        if (!obj.residuals(tp, rp)) {
          throw NumericalError("refine_map: cannot differentiate parameter " +
                               std::to_string(j));
        }
        jac.col(j) = (r - rp) / h(j);
      } else {
        jac.col(j) = (rp - r) / h(j);
      }
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;

    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (int j = 0; j < param.n_params; ++j) {
        a(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      }
      const Eigen::VectorXd delta = a.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 4.0;
        continue;
      }
      const Eigen::VectorXd trial = theta + delta;
      Eigen::VectorXd rt;
      if (obj.residuals(trial, rt) && rt.squaredNorm() < objective) {
        const double new_objective = rt.squaredNorm();
        theta = trial;
        r = rt;
        lambda = std::max(lambda / 3.0, 1e-12);
        ++result.iterations;
        result.objective_history.push_back(new_objective);

        // Merge pass: elements squeezed below the minimum length are
        // removed and the fit restarted once from the merged chain.
        Pose2 cur_start;
        std::vector<TrackElement> cur_elements;
        param.decode(theta, cur_start, cur_elements);
        if (!merged_once) {
          std::vector<TrackElement> kept;
          for (const auto& e : cur_elements) {
            if (e.length < opts.min_element_length) {
              ++result.merged_elements;
            } else {
              kept.push_back(e);
            }
          }
          if (result.merged_elements > 0) {
            if (kept.empty()) {
              throw NumericalError("refine_map: all elements merged away");
            }
            merged_once = true;
            start = cur_start;
            elements = std::move(kept);
            // Re-derive transitional-arc ends from their new neighbors.
            for (std::size_t i = 0; i < elements.size(); ++i) {
              if (elements[i].shape != Shape::kTransitionalArc) continue;
              if (i > 0) elements[i].kappa0 = elements[i - 1].kappa1;
              if (i + 1 < elements.size()) elements[i].kappa1 = elements[i + 1].kappa0;
            }
            goto restart;
          }
        }

        const double rel = (objective - new_objective) / std::max(objective, 1e-300);
        objective = new_objective;
        if (rel < opts.rel_tolerance || objective < opts.objective_floor) {
          converged = true;
        }
        accepted = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;  // no descent direction left
  }

  Pose2 final_start;
  std::vector<TrackElement> final_elements;
  param.decode(theta, final_start, final_elements);
  if (opts.trim_to_trace) {
    trim_chain(final_start, final_elements, trace.front(), trace.back(),
               !opts.freeze_anchor, opts.min_element_length);
  }
  result.map = map_from_chain(final_start, std::move(final_elements), plane_origin);
  result.weighted_rms = std::sqrt(objective / weight_sum);
  result.iterations = static_cast<int>(result.objective_history.size()) - 1;
  return result;
}

}  // namespace railloc::maps
