#include "railloc/map_error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "railloc/errors.hpp"

namespace railloc::maps {

namespace {

struct Seg {
  double ax, ay, dx, dy, len2;
};

double point_to_segments(const std::vector<Seg>& segs, double px, double py) {
  double best = std::numeric_limits<double>::infinity();
  for (const Seg& s : segs) {
    double t = 0.0;
    if (s.len2 > 0.0) {
      t = ((px - s.ax) * s.dx + (py - s.ay) * s.dy) / s.len2;
      t = std::clamp(t, 0.0, 1.0);
    }
    const double ex = px - (s.ax + t * s.dx);
    const double ey = py - (s.ay + t * s.dy);
    const double d2 = ex * ex + ey * ey;
    if (d2 < best) best = d2;
  }
  return std::sqrt(best);
}

MapErrorStats error_against(const TrackMap& map, const std::vector<Seg>& segs) {
  const geom::ElementChain chain = chain_in_plane(map, map.p0);
  const double total = chain.total_length();
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(total) + 1);
  for (double s = 0.0; s <= total; s += 1.0) {
    const geom::Pose2 p = chain.pose_at(s);
    samples.push_back(point_to_segments(segs, p.x, p.y));
  }
  double mn = std::numeric_limits<double>::infinity();
  for (double v : samples) mn = std::min(mn, v);
  if (mn > 1000.0) {
    throw DomainError("map and reference polyline are disjoint (closest approach " +
                      std::to_string(mn) + " m)");
  }
  return map_error_stats_from_samples(std::move(samples));
}

}  // namespace

MapErrorStats map_error_stats_from_samples(std::vector<double> samples) {
  if (samples.empty()) throw DomainError("map error stats: no samples");
  MapErrorStats st;
  st.samples = std::move(samples);
  double sum = 0.0;
  for (double v : st.samples) {
    sum += v;
    st.max = std::max(st.max, v);
  }
  st.mean = sum / static_cast<double>(st.samples.size());
  std::vector<double> sorted = st.samples;
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  for (double p : {0.95, 0.99, 1.00}) {
    std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, n);
    st.quantiles[p] = sorted[rank - 1];
  }
  return st;
}

MapErrorStats map_error_cdf(const TrackMap& map,
                            const std::vector<geom::GeoPoint>& reference) {
  if (reference.size() < 2) {
    throw DomainError("reference polyline needs at least 2 points");
  }
  std::vector<geom::LocalXY> xy;
  xy.reserve(reference.size());
  for (const auto& g : reference) xy.push_back(geom::geo_to_local(g, map.p0));
  return map_error_cdf_local(map, xy);
}

MapErrorStats map_error_cdf_local(const TrackMap& map,
                                  const std::vector<geom::LocalXY>& reference_xy) {
  if (reference_xy.size() < 2) {
    throw DomainError("reference polyline needs at least 2 points");
  }
  std::vector<Seg> segs;
  segs.reserve(reference_xy.size() - 1);
  for (std::size_t i = 0; i + 1 < reference_xy.size(); ++i) {
    Seg s;
    s.ax = reference_xy[i].x;
    s.ay = reference_xy[i].y;
    s.dx = reference_xy[i + 1].x - s.ax;
    s.dy = reference_xy[i + 1].y - s.ay;
    s.len2 = s.dx * s.dx + s.dy * s.dy;
    segs.push_back(s);
  }
  return error_against(map, segs);
}

}  // namespace railloc::maps
