#pragma once

#include <vector>

#include "dom/workspace.hpp"

namespace dom {

/// One passage crossing along a path at parameter `tau`.
struct Crossing {
  Passage passage;
  double tau = 0.0;
  Point point = Point::Zero();
};
using PassageRecord = std::vector<Crossing>;

/// Arc-length parameterized polyline.
class Path {
 public:
  Path() = default;
  /// Consecutive duplicate nodes are dropped; fewer than two distinct nodes
  /// throws InvalidGeometry.
  explicit Path(std::vector<Point> nodes);

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  double length() const { return length_; }
  const Point& front() const { return nodes_.front(); }
  const Point& back() const { return nodes_.back(); }

  Point at(double tau) const;
  /// Index of the segment [i, i+1] containing tau.
  std::size_t segment_at(double tau) const;

  Path translated(const Point& v) const;
  Path reversed() const;
  /// Restriction to [t0, t1], reparameterized to [0, 1].
  Path sub(double t0, double t1) const;
  /// Subdivide until every segment is at most `max_step` long.
  Path densified(double max_step) const;
  /// Uniform arc-length resampling to `count` nodes (count >= 2).
  Path resampled(std::size_t count) const;

  /// Nearest point parameter, searching all segments.
  double project(const Point& p) const;

  PassageRecord passages;

 private:
  std::vector<Point> nodes_;
  std::vector<double> params_;
  double length_ = 0.0;
};

/// Arc-length concatenation; throws EndpointMismatch when the first path
/// does not end where the second begins (tolerance 1e-9 px).
Path concat(const Path& a, const Path& b);

/// Parameter of the breakpoint between `a` and `b` inside concat(a, b).
double concat_breakpoint(const Path& a, const Path& b);

/// Every segment of the polyline keeps clearance >= delta.
bool path_free(const std::vector<Point>& nodes, const Environment& env, double delta);
inline bool path_free(const Path& p, const Environment& env, double delta) {
  return path_free(p.nodes(), env, delta);
}

}  // namespace dom
