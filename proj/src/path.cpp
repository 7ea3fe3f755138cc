#include "dom/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dom {

Path::Path(std::vector<Point> nodes) {
  for (const Point& p : nodes) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidGeometry, "non-finite path node");
    if (nodes_.empty() || (p - nodes_.back()).norm() > 0.0) nodes_.push_back(p);
  }
  if (nodes_.size() < 2) throw Error(ErrorCode::InvalidGeometry, "path needs two distinct nodes");
  std::vector<double> acc(nodes_.size(), 0.0);
  for (std::size_t i = 1; i < nodes_.size(); ++i) acc[i] = acc[i - 1] + (nodes_[i] - nodes_[i - 1]).norm();
  length_ = acc.back();
  params_.resize(nodes_.size());
  for (std::size_t i = 0; i < acc.size(); ++i) params_[i] = acc[i] / length_;
  params_.back() = 1.0;
  for (std::size_t i = 1; i < params_.size(); ++i) {
    // Nodes far shorter than the path length can collapse numerically.
    if (params_[i] <= params_[i - 1]) params_[i] = std::nextafter(params_[i - 1], 2.0);
  }
  params_.back() = std::max(params_.back(), 1.0);
}

std::size_t Path::segment_at(double tau) const {
  tau = std::clamp(tau, 0.0, 1.0);
  auto it = std::upper_bound(params_.begin(), params_.end(), tau);
  std::size_t i = static_cast<std::size_t>(std::distance(params_.begin(), it));
  if (i == 0) return 0;
  return std::min(i - 1, nodes_.size() - 2);
}

Point Path::at(double tau) const {
  if (tau <= 0.0) return nodes_.front();
  if (tau >= 1.0) return nodes_.back();
  const std::size_t i = segment_at(tau);
  const double span = params_[i + 1] - params_[i];
  const double u = span > 0.0 ? (tau - params_[i]) / span : 0.0;
  return nodes_[i] + u * (nodes_[i + 1] - nodes_[i]);
}

Path Path::translated(const Point& v) const {
  std::vector<Point> out = nodes_;
  for (Point& p : out) p += v;
  Path path(std::move(out));
  path.passages = passages;
  return path;
}

Path Path::reversed() const { return Path(std::vector<Point>(nodes_.rbegin(), nodes_.rend())); }

Path Path::sub(double t0, double t1) const {
  t0 = std::clamp(t0, 0.0, 1.0);
  t1 = std::clamp(t1, 0.0, 1.0);
  std::vector<Point> out{at(t0)};
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (params_[i] > t0 && params_[i] < t1) out.push_back(nodes_[i]);
  }
  out.push_back(at(t1));
  return Path(std::move(out));
}

Path Path::densified(double max_step) const {
  std::vector<Point> out{nodes_.front()};
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const Point a = nodes_[i - 1];
    const Point b = nodes_[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / max_step)));
    for (int k = 1; k <= pieces; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
  }
  Path path(std::move(out));
  path.passages = passages;
  return path;
}

Path Path::resampled(std::size_t count) const {
  count = std::max<std::size_t>(count, 2);
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(at(static_cast<double>(k) / (count - 1)));
  out.back() = nodes_.back();
  return Path(std::move(out));
}

double Path::project(const Point& p) const {
  double best = std::numeric_limits<double>::infinity();
  double tau = 0.0;
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const Point q = closest_on_segment(p, nodes_[i], nodes_[i + 1]);
    const double d = (p - q).squaredNorm();
    if (d < best) {
      best = d;
      const double seg = (nodes_[i + 1] - nodes_[i]).norm();
      tau = params_[i] + (params_[i + 1] - params_[i]) * ((q - nodes_[i]).norm() / seg);
    }
  }
  return tau;
}

double concat_breakpoint(const Path& a, const Path& b) { return a.length() / (a.length() + b.length()); }

Path concat(const Path& a, const Path& b) {
  if ((a.back() - b.front()).norm() > 1e-9) {
    throw Error(ErrorCode::EndpointMismatch, "first path does not end where the second begins");
  }
  std::vector<Point> nodes = a.nodes();
  nodes.insert(nodes.end(), b.nodes().begin() + 1, b.nodes().end());
  Path out(std::move(nodes));
  const double r = concat_breakpoint(a, b);
  for (Crossing c : a.passages) {
    c.tau *= r;
    out.passages.push_back(c);
  }
  for (Crossing c : b.passages) {
    c.tau = r + (1.0 - r) * c.tau;
    out.passages.push_back(c);
  }
  return out;
}

bool path_free(const std::vector<Point>& nodes, const Environment& env, double delta) {
  if (nodes.size() == 1) return env.segment_free(nodes[0], nodes[0], delta);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!env.segment_free(nodes[i - 1], nodes[i], delta)) return false;
  }
  return true;
}

}  // namespace dom
