#include "railloc/geo.hpp"

#include <cmath>
#include <string>

#include "railloc/errors.hpp"
#include "railloc/geometry.hpp"

namespace railloc::geom {

namespace {

constexpr double kA = 6378137.0;             // WGS84 semi-major axis
constexpr double kF = 1.0 / 298.257223563;   // flattening
constexpr double kE2 = kF * (2.0 - kF);      // first eccentricity squared
constexpr double kDeg = kPi / 180.0;

struct Ecef {
  double x = 0.0, y = 0.0, z = 0.0;
};

Ecef geodetic_to_ecef(double lat_rad, double lon_rad, double h) {
  const double sphi = std::sin(lat_rad), cphi = std::cos(lat_rad);
  const double n = kA / std::sqrt(1.0 - kE2 * sphi * sphi);
  return {(n + h) * cphi * std::cos(lon_rad),
          (n + h) * cphi * std::sin(lon_rad),
          (n * (1.0 - kE2) + h) * sphi};
}

// Iterative latitude recovery; converges to < 1e-14 rad in a few steps at
// mid latitudes.
void ecef_to_geodetic(const Ecef& p, double& lat_rad, double& lon_rad, double& h) {
  lon_rad = std::atan2(p.y, p.x);
  const double rho = std::hypot(p.x, p.y);
  double phi = std::atan2(p.z, rho * (1.0 - kE2));
  double n = kA;
  for (int i = 0; i < 50; ++i) {
    const double sphi = std::sin(phi);
    n = kA / std::sqrt(1.0 - kE2 * sphi * sphi);
    h = rho / std::cos(phi) - n;
    const double next = std::atan2(p.z, rho * (1.0 - kE2 * n / (n + h)));
    if (next == phi) break;
    phi = next;
  }
  lat_rad = phi;
  const double sphi = std::sin(phi);
  n = kA / std::sqrt(1.0 - kE2 * sphi * sphi);
  h = rho / std::cos(phi) - n;
}

struct EnuBasis {
  // Unit east/north/up vectors in ECEF at a geodetic point.
  Ecef e, n, u;
};

EnuBasis enu_basis(double lat_rad, double lon_rad) {
  const double sphi = std::sin(lat_rad), cphi = std::cos(lat_rad);
  const double slam = std::sin(lon_rad), clam = std::cos(lon_rad);
  EnuBasis b;
  b.e = {-slam, clam, 0.0};
  b.n = {-sphi * clam, -sphi * slam, cphi};
  b.u = {cphi * clam, cphi * slam, sphi};
  return b;
}

double dot(const Ecef& a, const Ecef& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

}  // namespace

void validate_geo(const GeoPoint& p) {
  if (!std::isfinite(p.lat_deg) || !std::isfinite(p.lon_deg) ||
      std::abs(p.lat_deg) > 90.0 || std::abs(p.lon_deg) > 180.0) {
    throw DomainError("invalid WGS84 point (" + std::to_string(p.lat_deg) + ", " +
                      std::to_string(p.lon_deg) + ")");
  }
}

LocalXY geo_to_local(const GeoPoint& p, const GeoPoint& origin) {
  validate_geo(p);
  validate_geo(origin);
  const Ecef pe = geodetic_to_ecef(p.lat_deg * kDeg, p.lon_deg * kDeg, 0.0);
  const Ecef oe = geodetic_to_ecef(origin.lat_deg * kDeg, origin.lon_deg * kDeg, 0.0);
  const Ecef d{pe.x - oe.x, pe.y - oe.y, pe.z - oe.z};
  const EnuBasis b = enu_basis(origin.lat_deg * kDeg, origin.lon_deg * kDeg);
  return {dot(d, b.e), dot(d, b.n)};
}

GeoPoint local_to_geo(const LocalXY& xy, const GeoPoint& origin) {
  validate_geo(origin);
  if (!std::isfinite(xy.x) || !std::isfinite(xy.y)) {
    throw DomainError("local_to_geo: non-finite point");
  }
  const Ecef oe = geodetic_to_ecef(origin.lat_deg * kDeg, origin.lon_deg * kDeg, 0.0);
  const EnuBasis b = enu_basis(origin.lat_deg * kDeg, origin.lon_deg * kDeg);
  double up = 0.0;
  double lat = 0.0, lon = 0.0, h = 0.0;
  for (int i = 0; i < 16; ++i) {
    const Ecef pe{oe.x + xy.x * b.e.x + xy.y * b.n.x + up * b.u.x,
                  oe.y + xy.x * b.e.y + xy.y * b.n.y + up * b.u.y,
                  oe.z + xy.x * b.e.z + xy.y * b.n.z + up * b.u.z};
    ecef_to_geodetic(pe, lat, lon, h);
    if (std::abs(h) < 1e-11) break;
    up -= h;
  }
  return {lat / kDeg, lon / kDeg};
}

double heading_plane_to_local(double heading_in_plane, const GeoPoint& at,
                              const GeoPoint& plane_origin) {
  // Exact inverse of heading_local_to_plane: find the horizontal direction
  // at `at` whose projection into the origin plane has the given azimuth.
  const EnuBasis bo = enu_basis(plane_origin.lat_deg * kDeg, plane_origin.lon_deg * kDeg);
  const EnuBasis ba = enu_basis(at.lat_deg * kDeg, at.lon_deg * kDeg);
  const double ex = dot(ba.e, bo.e), ey = dot(ba.e, bo.n);
  const double nx = dot(ba.n, bo.e), ny = dot(ba.n, bo.n);
  const double dx = std::cos(heading_in_plane), dy = std::sin(heading_in_plane);
  const double ce = ex * dy - ey * dx;
  const double cn = nx * dy - ny * dx;
  double beta = std::atan2(-ce, cn);
  const double along = std::cos(beta) * (ex * dx + ey * dy) +
                       std::sin(beta) * (nx * dx + ny * dy);
  if (along < 0.0) beta = wrap_angle(beta + kPi);
  return beta;
}

double heading_local_to_plane(double heading_at_point, const GeoPoint& at,
                              const GeoPoint& plane_origin) {
  const EnuBasis ba = enu_basis(at.lat_deg * kDeg, at.lon_deg * kDeg);
  const EnuBasis bo = enu_basis(plane_origin.lat_deg * kDeg, plane_origin.lon_deg * kDeg);
  const double c = std::cos(heading_at_point), s = std::sin(heading_at_point);
  const Ecef dir{c * ba.e.x + s * ba.n.x, c * ba.e.y + s * ba.n.y,
                 c * ba.e.z + s * ba.n.z};
  return std::atan2(dot(dir, bo.n), dot(dir, bo.e));
}

}  // namespace railloc::geom
