#ifndef CAPMINK_GEOM_HPP
#define CAPMINK_GEOM_HPP

#include <cmath>

namespace capmink {

// Fixed tolerances; lengths are always measured relative to a body scale.
constexpr double TOL_ANGLE = 1e-9;          // radians
constexpr double TOL_LEN_REL = 1e-12;       // of diameter
constexpr double TOL_CENTROID_REL = 1e-10;  // of total mass
constexpr double PI = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double sqnorm(Vec2 a) { return a.x * a.x + a.y * a.y; }

inline Vec2 unit_vec(double theta) { return {std::cos(theta), std::sin(theta)}; }
// Outward normal at angle theta rotated +90 degrees: tangent of a CCW boundary.
inline Vec2 tangent_of(double theta) { return {-std::sin(theta), std::cos(theta)}; }

// Wrap into [0, 2*pi).
inline double wrap_angle(double t) {
  double w = std::fmod(t, 2.0 * PI);
  if (w < 0.0) w += 2.0 * PI;
  if (w >= 2.0 * PI) w = 0.0;
  return w;
}

// Signed difference a-b wrapped into (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::fmod(a - b, 2.0 * PI);
  if (d <= -PI) d += 2.0 * PI;
  if (d > PI) d -= 2.0 * PI;
  return d;
}

// Distance on the circle (geodesic), in [0, pi].
inline double angle_dist(double a, double b) { return std::fabs(angle_diff(a, b)); }

}  // namespace capmink

#endif
