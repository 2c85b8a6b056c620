#pragma once

// Test-only oracles, deliberately independent of the library's numerics:
// recursive adaptive Simpson for clothoid endpoints, a long-double ECEF
// matrix chain for the tangent-plane conversion, dense-sampling argmin for
// projections, and a fixed-point Riccati iteration for the EKF.

#include <cmath>
#include <functional>
#include <utility>

namespace oracles {

struct XY {
  double x = 0.0, y = 0.0;
};

inline double clothoid_heading(double psi0, double k0, double k1, double length,
                               double s) {
  return psi0 + k0 * s + (k1 - k0) * s * s / (2.0 * length);
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b) {
  return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = simpson(f, a, m);
  const double right = simpson(f, m, b);
  if (depth > 40 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, left, 0.5 * tol, depth + 1) +
         adaptive_simpson(f, m, b, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-11) {
  return detail::adaptive_simpson(f, a, b, detail::simpson(f, a, b), tol, 0);
}

// Clothoid endpoint by adaptive Simpson on the heading integral.
inline XY clothoid_endpoint(double psi0, double k0, double k1, double length,
                            double s, double tol = 1e-11) {
  auto fx = [&](double u) { return std::cos(clothoid_heading(psi0, k0, k1, length, u)); };
  auto fy = [&](double u) { return std::sin(clothoid_heading(psi0, k0, k1, length, u)); };
  return {integrate(fx, 0.0, s, tol), integrate(fy, 0.0, s, tol)};
}

// Independent WGS84 ECEF chain in long double.
struct Ecef3 {
  long double x, y, z;
};

inline Ecef3 geodetic_to_ecef_ld(long double lat_deg, long double lon_deg) {
  const long double a = 6378137.0L;
  const long double f = 1.0L / 298.257223563L;
  const long double e2 = f * (2.0L - f);
  const long double d2r = 3.14159265358979323846264338328L / 180.0L;
  const long double phi = lat_deg * d2r, lam = lon_deg * d2r;
  const long double n = a / std::sqrt(1.0L - e2 * std::sin(phi) * std::sin(phi));
  return {n * std::cos(phi) * std::cos(lam), n * std::cos(phi) * std::sin(lam),
          n * (1.0L - e2) * std::sin(phi)};
}

inline XY enu_oracle(double lat_deg, double lon_deg, double origin_lat_deg,
                     double origin_lon_deg) {
  const Ecef3 p = geodetic_to_ecef_ld(lat_deg, lon_deg);
  const Ecef3 o = geodetic_to_ecef_ld(origin_lat_deg, origin_lon_deg);
  const long double d2r = 3.14159265358979323846264338328L / 180.0L;
  const long double phi = origin_lat_deg * d2r, lam = origin_lon_deg * d2r;
  const long double dx = p.x - o.x, dy = p.y - o.y, dz = p.z - o.z;
  const long double e = -std::sin(lam) * dx + std::cos(lam) * dy;
  const long double n = -std::sin(phi) * std::cos(lam) * dx -
                        std::sin(phi) * std::sin(lam) * dy + std::cos(phi) * dz;
  return {static_cast<double>(e), static_cast<double>(n)};
}

}  // namespace oracles
