#include "dom/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dom {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::InvalidStart: return "InvalidStart";
    case ErrorCode::InvalidGoal: return "InvalidGoal";
    case ErrorCode::RejectionLimit: return "RejectionLimit";
    case ErrorCode::EndpointMismatch: return "EndpointMismatch";
    case ErrorCode::ConcatenationInfeasible: return "ConcatenationInfeasible";
    case ErrorCode::MissingCrossing: return "MissingCrossing";
    case ErrorCode::CenteringInfeasible: return "CenteringInfeasible";
    case ErrorCode::TransferInfeasible: return "Infeasible";
    case ErrorCode::DegenerateAngle: return "DegenerateAngle";
    case ErrorCode::NoFeasibleTarget: return "NoFeasibleTarget";
    case ErrorCode::DegenerateTangent: return "DegenerateTangent";
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::StepBudgetExhausted: return "StepBudgetExhausted";
    case ErrorCode::EscapeInfeasible: return "EscapeInfeasible";
    case ErrorCode::Schema: return "SchemaError";
  }
  return "Unknown";
}

Obstacle::Obstacle(int id, Polygon polygon) : id_(id), polygon_(std::move(polygon)) {
  if (polygon_.size() < 3) {
    throw Error(ErrorCode::DegeneratePolygon, "obstacle " + std::to_string(id) + " has fewer than 3 vertices");
  }
  for (const Point& p : polygon_) {
    if (!p.allFinite()) throw Error(ErrorCode::DegeneratePolygon, "non-finite vertex");
  }
  if (signed_area(polygon_) < 0.0) std::reverse(polygon_.begin(), polygon_.end());
  if (std::abs(signed_area(polygon_)) <= kGeomEps) {
    throw Error(ErrorCode::DegeneratePolygon, "obstacle " + std::to_string(id) + " has zero area");
  }
  if (!is_convex_ccw(polygon_)) {
    throw Error(ErrorCode::DegeneratePolygon, "obstacle " + std::to_string(id) + " is not convex");
  }
  centroid_ = dom::centroid(polygon_);
}

double Workspace::boundary_distance(const Point& p) const {
  if (!contains(p)) return 0.0;
  return std::min({p.x(), width - p.x(), p.y(), height - p.y()});
}

namespace {

void check_polygon(const Polygon& poly) {
  if (poly.size() < 3 || std::abs(signed_area(poly)) <= kGeomEps) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon needs >= 3 vertices and nonzero area");
  }
}

Polygon as_ccw(const Polygon& poly) {
  check_polygon(poly);
  Polygon out = poly;
  if (signed_area(out) < 0.0) std::reverse(out.begin(), out.end());
  if (!is_convex_ccw(out)) throw Error(ErrorCode::DegeneratePolygon, "polygon is not convex");
  return out;
}

Witness swap(Witness w) {
  std::swap(w.on_a, w.on_b);
  return w;
}

}  // namespace

Witness min_distance_witness(const Shape& a, const Shape& b) {
  struct Visitor {
    Witness operator()(const Point& p, const Point& q) const { return {(p - q).norm(), p, q}; }
    Witness operator()(const Point& p, const Segment& s) const {
      const Point q = closest_on_segment(p, s.a, s.b);
      return {(p - q).norm(), p, q};
    }
    Witness operator()(const Segment& s, const Point& p) const { return swap((*this)(p, s)); }
    Witness operator()(const Segment& s, const Segment& t) const {
      return segment_segment_witness(s.a, s.b, t.a, t.b);
    }
    Witness operator()(const Point& p, const Polygon& poly) const {
      return point_polygon_witness(p, as_ccw(poly));
    }
    Witness operator()(const Polygon& poly, const Point& p) const { return swap((*this)(p, poly)); }
    Witness operator()(const Segment& s, const Polygon& poly) const {
      return segment_polygon_witness(s.a, s.b, as_ccw(poly));
    }
    Witness operator()(const Polygon& poly, const Segment& s) const { return swap((*this)(s, poly)); }
    Witness operator()(const Polygon& p, const Polygon& q) const {
      return polygon_polygon_witness(as_ccw(p), as_ccw(q));
    }
  };
  return std::visit(Visitor{}, a, b);
}

double min_distance(const Shape& a, const Shape& b) { return min_distance_witness(a, b).distance; }

std::vector<Passage> detect_passages(std::span<const Obstacle> obstacles) {
  std::vector<Passage> out;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    for (std::size_t j = i + 1; j < obstacles.size(); ++j) {
      const Obstacle* oi = &obstacles[i];
      const Obstacle* oj = &obstacles[j];
      if (oi->id() > oj->id()) std::swap(oi, oj);
      const Witness w = polygon_polygon_witness(oi->polygon(), oj->polygon());
      if (w.distance <= kGeomEps) continue;
      bool blocked = false;
      for (std::size_t k = 0; k < obstacles.size() && !blocked; ++k) {
        if (k == i || k == j) continue;
        blocked = segment_polygon_witness(w.on_a, w.on_b, obstacles[k].polygon()).distance <= kGeomEps;
      }
      if (!blocked) out.push_back({oi->id(), oj->id(), w.on_a, w.on_b, w.distance});
    }
  }
  std::sort(out.begin(), out.end(), [](const Passage& x, const Passage& y) {
    return x.first != y.first ? x.first < y.first : x.second < y.second;
  });
  return out;
}

Environment::Environment(Workspace workspace, std::vector<Obstacle> obstacles)
    : workspace_(workspace), obstacles_(std::move(obstacles)) {
  if (!(workspace_.width > 0.0) || !(workspace_.height > 0.0)) {
    throw Error(ErrorCode::InvalidGeometry, "workspace dimensions must be positive");
  }
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    for (std::size_t j = i + 1; j < obstacles_.size(); ++j) {
      if (obstacles_[i].id() == obstacles_[j].id()) {
        throw Error(ErrorCode::InvalidGeometry, "duplicate obstacle id " + std::to_string(obstacles_[i].id()));
      }
      if (polygon_polygon_witness(obstacles_[i].polygon(), obstacles_[j].polygon()).distance <= kGeomEps) {
        throw Error(ErrorCode::InvalidGeometry, "obstacles " + std::to_string(obstacles_[i].id()) + " and " +
                                                    std::to_string(obstacles_[j].id()) + " overlap");
      }
    }
  }
  passages_ = detect_passages(obstacles_);
}

const Obstacle& Environment::obstacle(int id) const {
  for (const Obstacle& o : obstacles_) {
    if (o.id() == id) return o;
  }
  throw Error(ErrorCode::InvalidGeometry, "unknown obstacle id " + std::to_string(id));
}

const Passage* Environment::find_passage(int first, int second) const {
  if (first > second) std::swap(first, second);
  for (const Passage& p : passages_) {
    if (p.first == first && p.second == second) return &p;
  }
  return nullptr;
}

Witness Environment::nearest_obstacle(const Point& p) const {
  Witness best{std::numeric_limits<double>::infinity(), p, p};
  for (const Obstacle& o : obstacles_) {
    const Witness w = point_polygon_witness(p, o.polygon());
    if (w.distance < best.distance) best = w;
  }
  return best;
}

Witness Environment::nearest_obstacle(const Point& a, const Point& b) const {
  Witness best{std::numeric_limits<double>::infinity(), a, a};
  for (const Obstacle& o : obstacles_) {
    const Witness w = segment_polygon_witness(a, b, o.polygon());
    if (w.distance < best.distance) best = w;
  }
  return best;
}

double Environment::clearance(const Point& p) const {
  if (!workspace_.contains(p)) return 0.0;
  return std::min(workspace_.boundary_distance(p), nearest_obstacle(p).distance);
}

bool Environment::in_collision(const Point& p) const {
  for (const Obstacle& o : obstacles_) {
    if (point_in_convex(p, o.polygon())) return true;
  }
  return false;
}

bool Environment::segment_free(const Point& a, const Point& b, double delta) const {
  // The inset rectangle is convex, so checking the endpoints suffices.
  for (const Point& p : {a, b}) {
    if (p.x() < delta || p.y() < delta || p.x() > workspace_.width - delta ||
        p.y() > workspace_.height - delta) {
      return false;
    }
  }
  for (const Obstacle& o : obstacles_) {
    const double d = segment_polygon_witness(a, b, o.polygon()).distance;
    if (d <= 0.0 || d < delta) return false;
  }
  return true;
}

}  // namespace dom
