#include "dom/sim.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <queue>

#include "dom/error.hpp"

namespace dom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOverRelax = 1.5;

Point push_out(const Point& p, const Obstacle& o) {
  const auto& poly = o.polygon();
  Point best = p;
  double best_d = kInf;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point q = closest_on_segment(p, poly[i], poly[(i + 1) % poly.size()]);
    const double d = (q - p).norm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

bool strictly_inside(const Point& p, const Obstacle& o) {
  return point_in_convex(p, o.polygon()) && (push_out(p, o) - p).norm() > 1e-9;
}

// A node that enters an obstacle stops where its own motion first touches
// the boundary; nodes already inside are pushed to the nearest edge.
void resolve_contacts(DeformableBody& body, const Environment& env, const std::vector<Point>& previous) {
  const Workspace& ws = env.workspace();
  for (std::size_t k = 0; k < body.nodes.size(); ++k) {
    if (body.pinned(static_cast<int>(k))) continue;
    Point& p = body.nodes[k];
    p.x() = std::clamp(p.x(), 0.0, ws.width);
    p.y() = std::clamp(p.y(), 0.0, ws.height);
    for (const Obstacle& o : env.obstacles()) {
      if (!point_in_convex(p, o.polygon())) continue;
      const Point& from = previous[k];
      const Point motion = p - from;
      std::optional<double> hit;
      if (motion.norm() > 1e-12 && !strictly_inside(from, o)) {
        hit = ray_polygon_hit(from, motion.normalized(), o.polygon());
      }
      if (hit && *hit <= motion.norm()) {
        p = from + *hit * motion.normalized();
      } else {
        p = push_out(p, o);
      }
    }
  }
}

// Harmonic extension of the pinned-node displacements over the stretch graph.
std::vector<Point> harmonic_extension(const DeformableBody& body, const std::vector<Point>& pinned_shift) {
  const int n = static_cast<int>(body.nodes.size());
  std::vector<int> free_index(static_cast<std::size_t>(n), -1);
  int nf = 0;
  for (int k = 0; k < n; ++k) {
    if (!body.pinned(k)) free_index[static_cast<std::size_t>(k)] = nf++;
  }
  std::vector<Point> u = pinned_shift;
  if (nf == 0 || nf == n) return u;

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(nf, nf);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nf, 2);
  for (const Spring& s : body.springs) {
    if (s.kind != SpringKind::Stretch) continue;
    const int fi = free_index[static_cast<std::size_t>(s.i)];
    const int fj = free_index[static_cast<std::size_t>(s.j)];
    if (fi >= 0) l(fi, fi) += 1.0;
    if (fj >= 0) l(fj, fj) += 1.0;
    if (fi >= 0 && fj >= 0) {
      l(fi, fj) -= 1.0;
      l(fj, fi) -= 1.0;
    } else if (fi >= 0) {
      rhs.row(fi) += pinned_shift[static_cast<std::size_t>(s.j)].transpose();
    } else if (fj >= 0) {
      rhs.row(fj) += pinned_shift[static_cast<std::size_t>(s.i)].transpose();
    }
  }
  const Eigen::MatrixXd x = l.ldlt().solve(rhs);
  for (int k = 0; k < n; ++k) {
    const int f = free_index[static_cast<std::size_t>(k)];
    if (f >= 0) u[static_cast<std::size_t>(k)] = x.row(f).transpose();
  }
  return u;
}

}  // namespace

DeformableBody DeformableBody::chain(std::vector<Point> points, std::vector<int> grasps, std::vector<int> feedback,
                                     double bending, std::vector<int> hinges) {
  DeformableBody b;
  b.nodes = std::move(points);
  b.grasps = std::move(grasps);
  b.feedback_ids = std::move(feedback);
  b.topology = Topology::Chain;
  const int n = static_cast<int>(b.nodes.size());
  for (int i = 0; i + 1 < n; ++i) {
    b.springs.push_back({i, i + 1, (b.nodes[static_cast<std::size_t>(i + 1)] - b.nodes[static_cast<std::size_t>(i)]).norm(),
                         1.0, SpringKind::Stretch});
  }
  if (bending > 0.0) {
    for (int i = 0; i + 2 < n; ++i) {
      if (std::find(hinges.begin(), hinges.end(), i + 1) != hinges.end()) continue;
      b.springs.push_back(
          {i, i + 2, (b.nodes[static_cast<std::size_t>(i + 2)] - b.nodes[static_cast<std::size_t>(i)]).norm(), bending,
           SpringKind::Bend});
    }
  }
  b.validate();
  return b;
}

DeformableBody DeformableBody::grid(const Point& origin, int nx, int ny, double spacing, std::vector<int> grasps,
                                    std::vector<int> feedback) {
  DeformableBody b;
  b.topology = Topology::Grid;
  b.grasps = std::move(grasps);
  b.feedback_ids = std::move(feedback);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) b.nodes.push_back(origin + spacing * Point(ix, iy));
  }
  auto id = [nx](int ix, int iy) { return iy * nx + ix; };
  auto add = [&b](int i, int j, SpringKind kind) {
    b.springs.push_back({i, j, (b.nodes[static_cast<std::size_t>(j)] - b.nodes[static_cast<std::size_t>(i)]).norm(),
                         1.0, kind});
  };
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      if (ix + 1 < nx) add(id(ix, iy), id(ix + 1, iy), SpringKind::Stretch);
      if (iy + 1 < ny) add(id(ix, iy), id(ix, iy + 1), SpringKind::Stretch);
      if (ix + 1 < nx && iy + 1 < ny) {
        add(id(ix, iy), id(ix + 1, iy + 1), SpringKind::Bend);
        add(id(ix + 1, iy), id(ix, iy + 1), SpringKind::Bend);
      }
    }
  }
  b.validate();
  return b;
}

bool DeformableBody::pinned(int id) const {
  return std::find(grasps.begin(), grasps.end(), id) != grasps.end() ||
         std::find(anchors.begin(), anchors.end(), id) != anchors.end();
}

void DeformableBody::validate() const {
  const int n = static_cast<int>(nodes.size());
  auto valid = [n](int i) { return i >= 0 && i < n; };
  if (n == 0) throw Error(ErrorCode::InvalidGeometry, "body has no nodes");
  for (int g : grasps) {
    if (!valid(g)) throw Error(ErrorCode::InvalidGeometry, "grasp id out of range");
    if (std::find(anchors.begin(), anchors.end(), g) != anchors.end()) {
      throw Error(ErrorCode::InvalidGeometry, "node is both grasp and anchor");
    }
  }
  for (int a : anchors) {
    if (!valid(a)) throw Error(ErrorCode::InvalidGeometry, "anchor id out of range");
  }
  if (feedback_ids.empty()) throw Error(ErrorCode::InvalidGeometry, "body has no feedback points");
  for (int f : feedback_ids) {
    if (!valid(f)) throw Error(ErrorCode::InvalidGeometry, "feedback id out of range");
  }
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const Spring& s : springs) {
    if (!valid(s.i) || !valid(s.j) || s.i == s.j) throw Error(ErrorCode::InvalidGeometry, "spring references bad node");
    if (s.kind == SpringKind::Stretch) {
      adj[static_cast<std::size_t>(s.i)].push_back(s.j);
      adj[static_cast<std::size_t>(s.j)].push_back(s.i);
    }
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    for (int m : adj[static_cast<std::size_t>(k)]) {
      if (!seen[static_cast<std::size_t>(m)]) {
        seen[static_cast<std::size_t>(m)] = true;
        ++count;
        stack.push_back(m);
      }
    }
  }
  if (count != n) throw Error(ErrorCode::InvalidGeometry, "spring graph is not connected");
}

double relax(DeformableBody& body, const Environment& env, const SimConfig& cfg, int iterations) {
  const std::size_t n = body.nodes.size();
  std::vector<double> inv(n);
  for (std::size_t k = 0; k < n; ++k) inv[k] = body.pinned(static_cast<int>(k)) ? 0.0 : 1.0;
  std::vector<int> degree(n, 0);
  for (const Spring& s : body.springs) {
    ++degree[static_cast<std::size_t>(s.i)];
    ++degree[static_cast<std::size_t>(s.j)];
  }
  double last = 0.0;
  std::vector<Point> delta(n);
  for (int it = 0; it < iterations; ++it) {
    const std::vector<Point> before = body.nodes;
    std::fill(delta.begin(), delta.end(), Point::Zero());
    for (const Spring& s : body.springs) {
      const auto i = static_cast<std::size_t>(s.i);
      const auto j = static_cast<std::size_t>(s.j);
      const double w = inv[i] + inv[j];
      if (w == 0.0) continue;
      const Point d = before[j] - before[i];
      const double len = d.norm();
      if (len <= 1e-12) continue;
      const double k = std::min(1.0, s.stiffness * cfg.stiffness_scale);
      const Point corr = k * (len - s.rest) / (len * w) * d;
      delta[i] += inv[i] * corr;
      delta[j] -= inv[j] * corr;
    }
    // Averaged (Jacobi) update: no dependence on spring order.
    for (std::size_t k = 0; k < n; ++k) {
      if (degree[k] > 0) body.nodes[k] += cfg.damping * kOverRelax * delta[k] / degree[k];
    }
    resolve_contacts(body, env, before);
    last = 0.0;
    for (std::size_t k = 0; k < n; ++k) last = std::max(last, (body.nodes[k] - before[k]).norm());
  }
  return last;
}

DeformableBody step(const DeformableBody& body, const std::vector<Point>& rdot, double dt, const Environment& env,
                    const SimConfig& cfg) {
  if (rdot.size() != body.grasps.size()) throw Error(ErrorCode::InvalidGeometry, "one command per grasp expected");
  DeformableBody next = body;
  std::vector<Point> shift(body.nodes.size(), Point::Zero());
  for (std::size_t g = 0; g < body.grasps.size(); ++g) shift[static_cast<std::size_t>(body.grasps[g])] = rdot[g] * dt;
  const std::vector<Point> u = harmonic_extension(body, shift);
  for (std::size_t k = 0; k < next.nodes.size(); ++k) next.nodes[k] += u[k];
  for (std::size_t g = 0; g < body.grasps.size(); ++g) {
    const auto id = static_cast<std::size_t>(body.grasps[g]);
    next.nodes[id] = body.nodes[id] + rdot[g] * dt;
  }
  resolve_contacts(next, env, body.nodes);
  relax(next, env, cfg, cfg.iterations);
  return next;
}

FeedbackVector read_feedback(const DeformableBody& body) {
  FeedbackVector s;
  for (int f : body.feedback_ids) s.push_back(body.nodes[static_cast<std::size_t>(f)]);
  return s;
}

DoDistance do_obstacle_distance(const DeformableBody& body, const Environment& env) {
  DoDistance best;
  best.distance = kInf;
  for (std::size_t k = 0; k < body.nodes.size(); ++k) {
    const Witness w = env.nearest_obstacle(body.nodes[k]);
    if (w.distance < best.distance) best = {w.distance, w.on_a, w.on_b, static_cast<int>(k)};
  }
  for (const Spring& s : body.springs) {
    if (s.kind != SpringKind::Stretch) continue;
    const Point& a = body.nodes[static_cast<std::size_t>(s.i)];
    const Point& b = body.nodes[static_cast<std::size_t>(s.j)];
    const Witness w = env.nearest_obstacle(a, b);
    if (w.distance < best.distance) {
      const int node = (w.on_a - a).norm() <= (w.on_a - b).norm() ? s.i : s.j;
      best = {w.distance, w.on_a, w.on_b, node};
    }
  }
  return best;
}

int nearest_feedback(const DeformableBody& body, int node) {
  const std::size_t n = body.nodes.size();
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const Spring& s : body.springs) {
    if (s.kind != SpringKind::Stretch) continue;
    adj[static_cast<std::size_t>(s.i)].emplace_back(s.j, s.rest);
    adj[static_cast<std::size_t>(s.j)].emplace_back(s.i, s.rest);
  }
  std::vector<double> dist(n, kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<std::size_t>(node)] = 0.0;
  queue.emplace(0.0, node);
  while (!queue.empty()) {
    const auto [d, k] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(k)]) continue;
    for (const auto& [m, w] : adj[static_cast<std::size_t>(k)]) {
      if (d + w < dist[static_cast<std::size_t>(m)]) {
        dist[static_cast<std::size_t>(m)] = d + w;
        queue.emplace(d + w, m);
      }
    }
  }
  int best = 0;
  for (std::size_t i = 1; i < body.feedback_ids.size(); ++i) {
    if (dist[static_cast<std::size_t>(body.feedback_ids[i])] <
        dist[static_cast<std::size_t>(body.feedback_ids[static_cast<std::size_t>(best)])]) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

Eigen::VectorXd shape_measure(const DeformableBody& body, const FeedbackVector& s0) {
  return side_length_change(s0, read_feedback(body));
}

BodyPlant::BodyPlant(DeformableBody body, SimConfig cfg) : body_(std::move(body)), cfg_(cfg) { body_.validate(); }

std::vector<Point> BodyPlant::handles() const {
  std::vector<Point> r;
  for (int g : body_.grasps) r.push_back(body_.nodes[static_cast<std::size_t>(g)]);
  return r;
}

void BodyPlant::command(const std::vector<Point>& rdot, const Environment& env) {
  body_ = step(body_, rdot, cfg_.dt, env, cfg_);
}

AffinePlant::AffinePlant(Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<Point> r)
    : a_(std::move(a)), b_(std::move(b)), r_(std::move(r)) {}

FeedbackVector AffinePlant::feedback() const {
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(r_.size()));
  for (std::size_t i = 0; i < r_.size(); ++i) r.segment<2>(2 * static_cast<Eigen::Index>(i)) = r_[i];
  const Eigen::VectorXd s = a_ * r + b_;
  FeedbackVector out(static_cast<std::size_t>(s.size() / 2));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.segment<2>(2 * static_cast<Eigen::Index>(i));
  return out;
}

void AffinePlant::command(const std::vector<Point>& rdot, const Environment&) {
  for (std::size_t i = 0; i < r_.size(); ++i) r_[i] += rdot[i];
}

DoDistance AffinePlant::distance(const Environment& env) const {
  const FeedbackVector s = feedback();
  DoDistance best;
  best.distance = kInf;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Witness w = env.nearest_obstacle(s[k]);
    if (w.distance < best.distance) best = {w.distance, w.on_a, w.on_b, static_cast<int>(k)};
  }
  return best;
}

}  // namespace dom
