#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace critlab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
  double norm() const { return std::hypot(x, y); }
  std::complex<double> to_complex() const { return {x, y}; }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

struct Segment {
  Vec2 a;
  Vec2 b;
};

/// Closed-segment intersection test (touching endpoints count).
bool segments_intersect(const Segment& s, const Segment& t, double eps = 1e-12);

/// Distance from p to segment s.
double point_segment_distance(Vec2 p, const Segment& s);

using Polygon = std::vector<Vec2>;

double signed_area(const Polygon& poly);

/// True iff p lies strictly inside the polygon; points within `boundary_eps`
/// of an edge are not interior.
bool strictly_inside(const Polygon& poly, Vec2 p, double boundary_eps);

/// Non-adjacent edges must not touch; adjacent edges share only their vertex.
bool is_simple(const Polygon& poly);

Segment polygon_edge(const Polygon& poly, int e);

Vec2 centroid(const Polygon& poly);

}  // namespace critlab
