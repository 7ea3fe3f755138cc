#pragma once

#include <span>
#include <variant>
#include <vector>

#include "dom/error.hpp"
#include "dom/geometry.hpp"

namespace dom {

/// Convex obstacle, stored counter-clockwise.
class Obstacle {
 public:
  /// Throws DegeneratePolygon for fewer than 3 vertices, zero area or a
  /// non-convex outline. Clockwise input is reversed.
  Obstacle(int id, Polygon polygon);

  int id() const { return id_; }
  const Polygon& polygon() const { return polygon_; }
  Point centroid() const { return centroid_; }

 private:
  int id_;
  Polygon polygon_;
  Point centroid_;
};

struct Workspace {
  double width = 640.0;
  double height = 480.0;

  bool contains(const Point& p) const {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width && p.y() <= height;
  }
  double boundary_distance(const Point& p) const;
};

/// Gap between two obstacles. `a` lies on obstacle `first`, `b` on `second`;
/// the witness segment [a, b] realizes the minimum inter-obstacle distance.
struct Passage {
  int first = 0;
  int second = 0;
  Point a = Point::Zero();
  Point b = Point::Zero();
  double width = 0.0;

  Point center() const { return 0.5 * (a + b); }
  Point direction() const { return (b - a) / width; }
  bool operator==(const Passage& o) const { return first == o.first && second == o.second; }
};

/// Polygon, point or segment argument for `min_distance`.
struct Segment {
  Point a;
  Point b;
};
using Shape = std::variant<Point, Segment, Polygon>;

Witness min_distance_witness(const Shape& a, const Shape& b);
double min_distance(const Shape& a, const Shape& b);

class Environment {
 public:
  Environment() = default;
  /// Validates obstacles (convex, pairwise disjoint) and derives passages.
  Environment(Workspace workspace, std::vector<Obstacle> obstacles);

  const Workspace& workspace() const { return workspace_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  const std::vector<Passage>& passages() const { return passages_; }

  const Obstacle& obstacle(int id) const;
  const Passage* find_passage(int first, int second) const;

  /// Distance to the nearest obstacle and workspace wall; 0 outside.
  double clearance(const Point& p) const;
  /// Distance to the nearest obstacle only (no walls), infinity when empty.
  Witness nearest_obstacle(const Point& p) const;
  Witness nearest_obstacle(const Point& a, const Point& b) const;
  bool in_collision(const Point& p) const;

  /// Every point of [a, b] keeps clearance >= delta. With delta = 0 the
  /// segment must not touch any obstacle.
  bool segment_free(const Point& a, const Point& b, double delta) const;

 private:
  Workspace workspace_;
  std::vector<Obstacle> obstacles_;
  std::vector<Passage> passages_;
};

/// Valid passages: obstacle pairs whose witness segment is not blocked by
/// any third obstacle.
std::vector<Passage> detect_passages(std::span<const Obstacle> obstacles);

}  // namespace dom
