#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pedplan {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm_sq() const { return x * x + y * y; }
  double norm() const { return std::hypot(x, y); }

  Vec2 normalized() const {
    double n = norm();
    return n > 1e-12 ? Vec2{x / n, y / n} : Vec2{};
  }
  // Left-hand normal.
  Vec2 perp() const { return {-y, x}; }
  Vec2 rotated(double angle) const {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

struct Aabb {
  Vec2 min;
  Vec2 max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  double area() const { return width() * height(); }
  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

using Polygon = std::vector<Vec2>;

double polygon_signed_area(std::span<const Vec2> poly);
bool polygon_is_ccw(std::span<const Vec2> poly);
// No two non-adjacent edges intersect and no edge is degenerate.
bool polygon_is_simple(std::span<const Vec2> poly);
// Even-odd rule; points on the boundary are implementation-defined.
bool point_in_polygon(Vec2 p, std::span<const Vec2> poly);
double polygon_boundary_distance(Vec2 p, std::span<const Vec2> poly);
// Positive distance when outside, 0 when inside or on the boundary.
double distance_to_polygon(Vec2 p, std::span<const Vec2> poly);
Aabb polygon_aabb(std::span<const Vec2> poly);
Vec2 polygon_centroid(std::span<const Vec2> poly);

Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b);
double distance_point_segment(Vec2 p, Vec2 a, Vec2 b);
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

struct PolylineHit {
  Vec2 point;      // closest point on the polyline
  Vec2 tangent;    // unit direction of the segment containing it
  double distance = 0.0;
  double arc = 0.0;  // arc length from the polyline start to the hit
};
PolylineHit closest_point_on_polyline(Vec2 p, std::span<const Vec2> polyline);
double polyline_length(std::span<const Vec2> polyline);

// Oriented box tests used by the simulation-level collision check.
bool obb_contains(Vec2 center, double heading, double half_length,
                  double half_width, Vec2 p);
bool obb_disc_overlap(Vec2 center, double heading, double half_length,
                      double half_width, Vec2 disc_center, double radius);
bool obb_obb_overlap(Vec2 ca, double ha, double la, double wa, Vec2 cb,
                     double hb, double lb, double wb);

}  // namespace pedplan
