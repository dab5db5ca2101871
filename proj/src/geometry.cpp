#include "critlab/geometry.hpp"

#include <algorithm>

namespace critlab {

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c, double eps) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({1.0, (b - a).norm() * (c - a).norm()});
  if (v > eps * scale) return 1;
  if (v < -eps * scale) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p, double eps) {
  return std::min(a.x, b.x) - eps <= p.x && p.x <= std::max(a.x, b.x) + eps &&
         std::min(a.y, b.y) - eps <= p.y && p.y <= std::max(a.y, b.y) + eps;
}

}  // namespace

bool segments_intersect(const Segment& s, const Segment& t, double eps) {
  const int o1 = orientation(s.a, s.b, t.a, eps);
  const int o2 = orientation(s.a, s.b, t.b, eps);
  const int o3 = orientation(t.a, t.b, s.a, eps);
  const int o4 = orientation(t.a, t.b, s.b, eps);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(s.a, s.b, t.a, eps)) return true;
  if (o2 == 0 && on_segment(s.a, s.b, t.b, eps)) return true;
  if (o3 == 0 && on_segment(t.a, t.b, s.a, eps)) return true;
  if (o4 == 0 && on_segment(t.a, t.b, s.b, eps)) return true;
  return false;
}

double point_segment_distance(Vec2 p, const Segment& s) {
  const Vec2 d = s.b - s.a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return (p - s.a).norm();
  const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
  return (p - (s.a + d * t)).norm();
}

double signed_area(const Polygon& poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

bool strictly_inside(const Polygon& poly, Vec2 p, double boundary_eps) {
  const std::size_t n = poly.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j];
    const Vec2 b = poly[i];
    if (point_segment_distance(p, {a, b}) <= boundary_eps) return false;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

Segment polygon_edge(const Polygon& poly, int e) {
  const int n = static_cast<int>(poly.size());
  return {poly[e], poly[(e + 1) % n]};
}

bool is_simple(const Polygon& poly) {
  const int n = static_cast<int>(poly.size());
  if (n < 3) return false;
  if (std::abs(signed_area(poly)) <= 0.0) return false;
  for (int i = 0; i < n; ++i) {
    const Segment si = polygon_edge(poly, i);
    if ((si.b - si.a).norm() == 0.0) return false;
    for (int j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(si, polygon_edge(poly, j), 0.0)) return false;
    }
  }
  return true;
}

Vec2 centroid(const Polygon& poly) {
  const double a = signed_area(poly);
  double cx = 0.0;
  double cy = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % n];
    const double c = cross(p, q);
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

}  // namespace critlab
