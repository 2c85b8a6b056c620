#include "railloc/map_fusion.hpp"

#include <cmath>

#include "railloc/errors.hpp"

namespace railloc::fuse {

using filters::kX;
using filters::kY;

FusedPosition fuse_with_map(double t, const filters::KinematicState& state,
                            const geom::ElementChain* chain,
                            const MapFusionOptions& opts) {
  FusedPosition out;
  out.t = t;
  out.x = state.x();
  out.y = state.y();
  out.cov_xx = state.cov(kX, kX);
  out.cov_xy = state.cov(kX, kY);
  out.cov_yy = state.cov(kY, kY);
  out.map_constrained = false;
  if (chain == nullptr) return out;  // no map: passthrough
  if (!(opts.map_sigma > 0.0)) throw DomainError("fuse_with_map: map_sigma must be > 0");

  const geom::Projection proj = chain->project(state.x(), state.y());
  const double d = proj.signed_distance;

  // Track frame at the foot point.
  const double tx = std::cos(proj.foot.heading), ty = std::sin(proj.foot.heading);
  const double nx = -ty, ny = tx;

  const double var_tt = tx * (out.cov_xx * tx + out.cov_xy * ty) +
                        ty * (out.cov_xy * tx + out.cov_yy * ty);
  const double var_nn = nx * (out.cov_xx * nx + out.cov_xy * ny) +
                        ny * (out.cov_xy * nx + out.cov_yy * ny);
  const double cov_tn = tx * (out.cov_xx * nx + out.cov_xy * ny) +
                        ty * (out.cov_xy * nx + out.cov_yy * ny);

  const double gate = 3.0 * 3.0 * std::sqrt(std::max(var_nn, 0.0)) + opts.gate_extra;
  if (std::abs(d) > gate) return out;

  // Scalar Kalman update along the cross-track axis; the along-track
  // component carries no map information and stays untouched.
  const double s = var_nn + opts.map_sigma * opts.map_sigma;
  const double f = opts.map_sigma * opts.map_sigma / s;
  const double d_new = d * f;
  out.x += (d_new - d) * nx;
  out.y += (d_new - d) * ny;

  const double var_nn_new = var_nn * f;
  const double cov_tn_new = cov_tn * f;
  out.cov_xx = var_tt * tx * tx + var_nn_new * nx * nx + 2.0 * cov_tn_new * tx * nx;
  out.cov_xy = var_tt * tx * ty + var_nn_new * nx * ny + cov_tn_new * (tx * ny + ty * nx);
  out.cov_yy = var_tt * ty * ty + var_nn_new * ny * ny + 2.0 * cov_tn_new * ty * ny;

  out.along_track_s = proj.chain_arclength;
  out.map_constrained = true;
  return out;
}

}  // namespace railloc::fuse
