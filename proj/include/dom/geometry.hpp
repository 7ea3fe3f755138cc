#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

namespace dom {

using Point = Eigen::Vector2d;
using Polygon = std::vector<Point>;
/// Stacked feedback points s_1 .. s_K.
using FeedbackVector = std::vector<Point>;

constexpr double kGeomEps = 1e-9;

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }
inline Point perp(const Point& v) { return {-v.y(), v.x()}; }

/// Closest pair between two point sets with its separation.
struct Witness {
  double distance = 0.0;
  Point on_a = Point::Zero();
  Point on_b = Point::Zero();
};

/// Closest point on segment [a, b] to p.
Point closest_on_segment(const Point& p, const Point& a, const Point& b);
double point_segment_distance(const Point& p, const Point& a, const Point& b);

/// True when closed segments [a, b] and [c, d] share at least one point.
bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d);

/// Intersection parameter of [a, b] with [c, d] as (t along ab, u along cd).
/// Returns nullopt for parallel or disjoint segments.
std::optional<std::pair<double, double>> segment_intersection(const Point& a, const Point& b,
                                                              const Point& c, const Point& d);

/// Exact distance between two closed segments, 0 when they intersect.
Witness segment_segment_witness(const Point& a, const Point& b, const Point& c, const Point& d);

double signed_area(std::span<const Point> poly);
Point centroid(std::span<const Point> poly);
bool is_convex_ccw(std::span<const Point> poly);

/// Inclusive containment test for a convex counter-clockwise polygon.
bool point_in_convex(const Point& p, std::span<const Point> poly);

/// Point-to-polygon witness (0 inside). `on_b` is the nearest polygon point.
Witness point_polygon_witness(const Point& p, std::span<const Point> poly);

/// Segment-to-polygon witness (0 on overlap). `on_a` lies on the segment.
Witness segment_polygon_witness(const Point& a, const Point& b, std::span<const Point> poly);

/// Minimum distance between convex polygons. When the minimizing pairs form
/// a family (parallel facing edges) the returned witness is the middle one.
Witness polygon_polygon_witness(std::span<const Point> pa, std::span<const Point> pb);

/// First hit of ray `origin + s * dir` (s > 0, |dir| = 1) with a convex
/// polygon boundary, or nullopt. Returns 0 when origin is inside.
std::optional<double> ray_polygon_hit(const Point& origin, const Point& dir,
                                      std::span<const Point> poly);

}  // namespace dom
