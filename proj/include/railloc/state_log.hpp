#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "railloc/geo.hpp"

namespace railloc::io {

// One per-epoch row of the localization state log. GNSS-only logs mark
// outage epochs unavailable; filter logs are always available. Map-fused
// runs append the fused columns.
struct StateLogRow {
  double t = 0.0;
  double x = 0.0, y = 0.0;
  double v = 0.0, psi = 0.0, omega = 0.0;
  double mu[3] = {0.0, 0.0, 0.0};
  double p_diag[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
  double cov_xy = 0.0;  // position cross-covariance, needed to rotate frames
  double sigma3_along = 0.0;  // filter-frame (estimated heading)
  double sigma3_cross = 0.0;
  bool available = true;

  bool has_fused = false;
  double fused_x = 0.0, fused_y = 0.0;
  double fused_cov_xx = 0.0, fused_cov_xy = 0.0, fused_cov_yy = 0.0;
  double fused_s = std::numeric_limits<double>::quiet_NaN();
  bool map_constrained = false;
};

// The optional origin is written as a `# origin_deg,lat,lon` comment so the
// log is self-contained for map building.
std::string state_log_to_csv(const std::vector<StateLogRow>& rows,
                             const std::string& manifest,
                             const std::optional<geom::GeoPoint>& origin = {});
std::vector<StateLogRow> state_log_from_csv(const std::string& text,
                                            std::optional<geom::GeoPoint>* origin = nullptr);

void state_log_save(const std::vector<StateLogRow>& rows, const std::string& path,
                    const std::string& manifest,
                    const std::optional<geom::GeoPoint>& origin = {});
std::vector<StateLogRow> state_log_load(const std::string& path,
                                        std::optional<geom::GeoPoint>* origin = nullptr);

}  // namespace railloc::io
