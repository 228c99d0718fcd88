#include "pedplan/geometry.hpp"

#include <algorithm>
#include <limits>

namespace pedplan {

double polygon_signed_area(std::span<const Vec2> poly) {
  double twice = 0.0;
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    twice += a.cross(b);
  }
  return 0.5 * twice;
}

bool polygon_is_ccw(std::span<const Vec2> poly) {
  return polygon_signed_area(poly) > 0.0;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  double v = (b - a).cross(c - a);
  if (v > 1e-12) return 1;
  if (v < -1e-12) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

}  // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  int o1 = orientation(a, b, c);
  int o2 = orientation(a, b, d);
  int o3 = orientation(c, d, a);
  int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool polygon_is_simple(std::span<const Vec2> poly) {
  size_t n = poly.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i) {
    if ((poly[(i + 1) % n] - poly[i]).norm() < 1e-12) return false;
  }
  for (size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i];
    Vec2 b = poly[(i + 1) % n];
    for (size_t j = i + 1; j < n; ++j) {
      // Skip edges sharing a vertex with edge i.
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> poly) {
  bool inside = false;
  size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double polygon_boundary_distance(Vec2 p, std::span<const Vec2> poly) {
  double best = std::numeric_limits<double>::infinity();
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    best = std::min(best, distance_point_segment(p, poly[i], poly[(i + 1) % n]));
  }
  return best;
}

double distance_to_polygon(Vec2 p, std::span<const Vec2> poly) {
  if (point_in_polygon(p, poly)) return 0.0;
  return polygon_boundary_distance(p, poly);
}

Aabb polygon_aabb(std::span<const Vec2> poly) {
  Aabb box{{std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()},
           {-std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()}};
  for (const Vec2& v : poly) {
    box.min.x = std::min(box.min.x, v.x);
    box.min.y = std::min(box.min.y, v.y);
    box.max.x = std::max(box.max.x, v.x);
    box.max.y = std::max(box.max.y, v.y);
  }
  return box;
}

Vec2 polygon_centroid(std::span<const Vec2> poly) {
  double a2 = 0.0;
  Vec2 c{};
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    double w = p.cross(q);
    a2 += w;
    c += (p + q) * w;
  }
  if (std::abs(a2) < 1e-12) return poly.empty() ? Vec2{} : poly[0];
  return c / (3.0 * a2);
}

Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len_sq = ab.norm_sq();
  if (len_sq < 1e-24) return a;
  double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return a + ab * t;
}

double distance_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  return (p - closest_point_on_segment(p, a, b)).norm();
}

PolylineHit closest_point_on_polyline(Vec2 p, std::span<const Vec2> polyline) {
  PolylineHit hit;
  hit.distance = std::numeric_limits<double>::infinity();
  if (polyline.empty()) return hit;
  if (polyline.size() == 1) {
    hit.point = polyline[0];
    hit.tangent = {1.0, 0.0};
    hit.distance = (p - polyline[0]).norm();
    hit.arc = 0.0;
    return hit;
  }
  double arc = 0.0;
  for (size_t i = 0; i + 1 < polyline.size(); ++i) {
    Vec2 a = polyline[i];
    Vec2 b = polyline[i + 1];
    Vec2 q = closest_point_on_segment(p, a, b);
    double d = (p - q).norm();
    if (d < hit.distance) {
      hit.distance = d;
      hit.point = q;
      hit.tangent = (b - a).normalized();
      hit.arc = arc + (q - a).norm();
    }
    arc += (b - a).norm();
  }
  return hit;
}

double polyline_length(std::span<const Vec2> polyline) {
  double len = 0.0;
  for (size_t i = 0; i + 1 < polyline.size(); ++i) {
    len += (polyline[i + 1] - polyline[i]).norm();
  }
  return len;
}

bool obb_contains(Vec2 center, double heading, double half_length,
                  double half_width, Vec2 p) {
  Vec2 local = (p - center).rotated(-heading);
  return std::abs(local.x) <= half_length && std::abs(local.y) <= half_width;
}

bool obb_disc_overlap(Vec2 center, double heading, double half_length,
                      double half_width, Vec2 disc_center, double radius) {
  Vec2 local = (disc_center - center).rotated(-heading);
  double dx = std::max(std::abs(local.x) - half_length, 0.0);
  double dy = std::max(std::abs(local.y) - half_width, 0.0);
  return dx * dx + dy * dy <= radius * radius;
}

namespace {

void obb_corners(Vec2 c, double h, double l, double w, Vec2 out[4]) {
  Vec2 ax = Vec2{std::cos(h), std::sin(h)};
  Vec2 ay = ax.perp();
  out[0] = c + ax * l + ay * w;
  out[1] = c - ax * l + ay * w;
  out[2] = c - ax * l - ay * w;
  out[3] = c + ax * l - ay * w;
}

bool separated_on_axis(Vec2 axis, const Vec2* pa, const Vec2* pb) {
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  double bmin = amin, bmax = -amin;
  for (int i = 0; i < 4; ++i) {
    double a = axis.dot(pa[i]);
    double b = axis.dot(pb[i]);
    amin = std::min(amin, a);
    amax = std::max(amax, a);
    bmin = std::min(bmin, b);
    bmax = std::max(bmax, b);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

bool obb_obb_overlap(Vec2 ca, double ha, double la, double wa, Vec2 cb,
                     double hb, double lb, double wb) {
  Vec2 pa[4], pb[4];
  obb_corners(ca, ha, la, wa, pa);
  obb_corners(cb, hb, lb, wb, pb);
  Vec2 axes[4] = {Vec2{std::cos(ha), std::sin(ha)},
                  Vec2{std::cos(ha), std::sin(ha)}.perp(),
                  Vec2{std::cos(hb), std::sin(hb)},
                  Vec2{std::cos(hb), std::sin(hb)}.perp()};
  for (const Vec2& axis : axes) {
    if (separated_on_axis(axis, pa, pb)) return false;
  }
  return true;
}

}  // namespace pedplan
