#pragma once

#include <utility>

namespace railloc::geom {

struct GeoPoint {
  double lat_deg = 0.0;  // WGS84
  double lon_deg = 0.0;
};

// Throws DomainError unless |lat| <= 90 and |lon| <= 180.
void validate_geo(const GeoPoint& p);

struct LocalXY {
  double x = 0.0;  // m east
  double y = 0.0;  // m north
};

// Exact geodetic -> ECEF -> east-north tangent-plane conversion on the WGS84
// ellipsoid (h = 0), anchored at `origin`.
LocalXY geo_to_local(const GeoPoint& p, const GeoPoint& origin);

// Inverse of geo_to_local; iterates the plane's up-offset until the result
// lies on the ellipsoid. Round-trip error <= 1e-9 degrees.
GeoPoint local_to_geo(const LocalXY& xy, const GeoPoint& origin);

// A horizontal direction is plane-dependent: the same geodesic direction at
// `at` has slightly different azimuths in tangent planes anchored at
// different origins (meridian convergence). These convert exactly through
// the ECEF direction vector.
double heading_plane_to_local(double heading_in_plane, const GeoPoint& at,
                              const GeoPoint& plane_origin);
double heading_local_to_plane(double heading_at_point, const GeoPoint& at,
                              const GeoPoint& plane_origin);

}  // namespace railloc::geom
