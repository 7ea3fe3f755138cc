#include "dom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dom {

Point closest_on_segment(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  return (p - closest_on_segment(p, a, b)).norm();
}

namespace {

int orientation(const Point& a, const Point& b, const Point& c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({1.0, (b - a).norm() * (c - a).norm()});
  if (std::abs(v) <= 1e-12 * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment_collinear(const Point& a, const Point& b, const Point& p) {
  return p.x() <= std::max(a.x(), b.x()) + kGeomEps && p.x() >= std::min(a.x(), b.x()) - kGeomEps &&
         p.y() <= std::max(a.y(), b.y()) + kGeomEps && p.y() >= std::min(a.y(), b.y()) - kGeomEps;
}

}  // namespace

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment_collinear(a, b, c)) return true;
  if (o2 == 0 && on_segment_collinear(a, b, d)) return true;
  if (o3 == 0 && on_segment_collinear(c, d, a)) return true;
  if (o4 == 0 && on_segment_collinear(c, d, b)) return true;
  return false;
}

std::optional<std::pair<double, double>> segment_intersection(const Point& a, const Point& b,
                                                              const Point& c, const Point& d) {
  const Point r = b - a;
  const Point s = d - c;
  const double denom = cross(r, s);
  if (std::abs(denom) <= 1e-14 * std::max(1.0, r.norm() * s.norm())) return std::nullopt;
  const Point ca = c - a;
  const double t = cross(ca, s) / denom;
  const double u = cross(ca, r) / denom;
  constexpr double tol = 1e-12;
  if (t < -tol || t > 1 + tol || u < -tol || u > 1 + tol) return std::nullopt;
  return std::make_pair(std::clamp(t, 0.0, 1.0), std::clamp(u, 0.0, 1.0));
}

Witness segment_segment_witness(const Point& a, const Point& b, const Point& c, const Point& d) {
  if (segments_intersect(a, b, c, d)) {
    Point hit = a;
    if (auto tu = segment_intersection(a, b, c, d)) {
      hit = a + tu->first * (b - a);
    } else {
      // collinear overlap: any shared point will do
      for (const Point& q : {a, b, c, d}) {
        if (point_segment_distance(q, a, b) <= kGeomEps && point_segment_distance(q, c, d) <= kGeomEps) {
          hit = q;
          break;
        }
      }
    }
    return {0.0, hit, hit};
  }
  Witness best{std::numeric_limits<double>::infinity(), a, c};
  auto consider = [&best](const Point& pa, const Point& pb) {
    const double dist = (pa - pb).norm();
    if (dist < best.distance) best = {dist, pa, pb};
  };
  consider(a, closest_on_segment(a, c, d));
  consider(b, closest_on_segment(b, c, d));
  consider(closest_on_segment(c, a, b), c);
  consider(closest_on_segment(d, a, b), d);
  return best;
}

double signed_area(std::span<const Point> poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    area += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * area;
}

Point centroid(std::span<const Point> poly) {
  const double a = signed_area(poly);
  if (std::abs(a) <= kGeomEps) {
    Point mean = Point::Zero();
    for (const Point& p : poly) mean += p;
    return poly.empty() ? mean : Point(mean / static_cast<double>(poly.size()));
  }
  Point c = Point::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % poly.size()];
    c += (p + q) * cross(p, q);
  }
  return c / (6.0 * a);
}

bool is_convex_ccw(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3 || signed_area(poly) <= kGeomEps) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    const Point& c = poly[(i + 2) % n];
    if (cross(b - a, c - b) < -1e-9) return false;
  }
  // A convex CCW polygon turns by exactly 2*pi in total.
  double winding = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point e0 = poly[(i + 1) % n] - poly[i];
    const Point e1 = poly[(i + 2) % n] - poly[(i + 1) % n];
    winding += std::atan2(cross(e0, e1), e0.dot(e1));
  }
  return std::abs(winding - 2.0 * M_PI) < 1e-6;
}

bool point_in_convex(const Point& p, std::span<const Point> poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    if (cross(b - a, p - a) < -1e-12 * std::max(1.0, (b - a).norm())) return false;
  }
  return true;
}

Witness point_polygon_witness(const Point& p, std::span<const Point> poly) {
  if (point_in_convex(p, poly)) return {0.0, p, p};
  Witness best{std::numeric_limits<double>::infinity(), p, p};
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point q = closest_on_segment(p, poly[i], poly[(i + 1) % poly.size()]);
    const double dist = (p - q).norm();
    if (dist < best.distance) best = {dist, p, q};
  }
  return best;
}

Witness segment_polygon_witness(const Point& a, const Point& b, std::span<const Point> poly) {
  if (point_in_convex(a, poly)) return {0.0, a, a};
  if (point_in_convex(b, poly)) return {0.0, b, b};
  Witness best{std::numeric_limits<double>::infinity(), a, a};
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Witness w = segment_segment_witness(a, b, poly[i], poly[(i + 1) % poly.size()]);
    if (w.distance < best.distance) best = w;
    if (best.distance == 0.0) break;
  }
  return best;
}

Witness polygon_polygon_witness(std::span<const Point> pa, std::span<const Point> pb) {
  const std::size_t na = pa.size();
  const std::size_t nb = pb.size();
  for (std::size_t i = 0; i < na; ++i) {
    if (point_in_convex(pa[i], pb)) return {0.0, pa[i], pa[i]};
  }
  for (std::size_t j = 0; j < nb; ++j) {
    if (point_in_convex(pb[j], pa)) return {0.0, pb[j], pb[j]};
  }
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const Witness w = segment_segment_witness(pa[i], pa[(i + 1) % na], pb[j], pb[(j + 1) % nb]);
      if (w.distance == 0.0) return w;
    }
  }

  std::vector<Witness> candidates;
  candidates.reserve(2 * na * nb);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const Point q = closest_on_segment(pa[i], pb[j], pb[(j + 1) % nb]);
      candidates.push_back({(pa[i] - q).norm(), pa[i], q});
    }
  }
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t i = 0; i < na; ++i) {
      const Point q = closest_on_segment(pb[j], pa[i], pa[(i + 1) % na]);
      candidates.push_back({(pb[j] - q).norm(), q, pb[j]});
    }
  }
  double dmin = std::numeric_limits<double>::infinity();
  for (const Witness& w : candidates) dmin = std::min(dmin, w.distance);
  const double tol = 1e-9 * std::max(1.0, dmin);

  // The minimizing pairs of two convex sets form a segment; pick its middle.
  const Witness* lo = nullptr;
  const Witness* hi = nullptr;
  double widest = -1.0;
  for (const Witness& u : candidates) {
    if (u.distance > dmin + tol) continue;
    for (const Witness& v : candidates) {
      if (v.distance > dmin + tol) continue;
      const double sep = (u.on_a - v.on_a).squaredNorm();
      if (sep > widest) {
        widest = sep;
        lo = &u;
        hi = &v;
      }
    }
  }
  const Point a = 0.5 * (lo->on_a + hi->on_a);
  const Point b = 0.5 * (lo->on_b + hi->on_b);
  return {(a - b).norm(), a, b};
}

std::optional<double> ray_polygon_hit(const Point& origin, const Point& dir,
                                      std::span<const Point> poly) {
  if (point_in_convex(origin, poly)) return 0.0;
  std::optional<double> best;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& a = poly[i];
    const Point e = poly[(i + 1) % poly.size()] - a;
    const double denom = cross(dir, e);
    if (std::abs(denom) <= 1e-14) continue;
    const Point ao = a - origin;
    const double s = cross(ao, e) / denom;
    const double u = cross(ao, dir) / denom;
    if (s > 0.0 && u >= -1e-12 && u <= 1.0 + 1e-12) {
      if (!best || s < *best) best = s;
    }
  }
  return best;
}

}  // namespace dom
