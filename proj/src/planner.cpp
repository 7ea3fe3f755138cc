#include "dom/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dom {

std::vector<EdgeCrossing> edge_crossings(const Point& a, const Point& b, const Environment& env) {
  std::vector<EdgeCrossing> out;
  for (const Passage& p : env.passages()) {
    if (auto tu = segment_intersection(a, b, p.a, p.b)) {
      out.push_back({&p, tu->first, a + tu->first * (b - a)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const EdgeCrossing& x, const EdgeCrossing& y) { return x.t < y.t; });
  return out;
}

std::vector<Passage> edge_passages(const Point& a, const Point& b, const Environment& env) {
  std::vector<Passage> out;
  for (const EdgeCrossing& c : edge_crossings(a, b, env)) out.push_back(*c.passage);
  return out;
}

PassageRecord path_passage_list(const Path& path, const Environment& env) {
  PassageRecord out;
  const auto& nodes = path.nodes();
  const auto& params = path.params();
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    for (const EdgeCrossing& c : edge_crossings(nodes[i], nodes[i + 1], env)) {
      // A crossing exactly at a shared node belongs to the earlier edge.
      if (c.t <= 0.0 && i > 0) continue;
      const double tau = params[i] + c.t * (params[i + 1] - params[i]);
      if (!out.empty() && out.back().passage == *c.passage && tau - out.back().tau < 1e-12) continue;
      if (!out.empty() && tau <= out.back().tau) {
        out.push_back({*c.passage, std::nextafter(out.back().tau, 2.0), c.point});
      } else {
        out.push_back({*c.passage, tau, c.point});
      }
    }
  }
  return out;
}

void Planner::Grid::init(double width, double height, double cell_size) {
  cell = cell_size;
  nx = std::max(1, static_cast<int>(std::ceil(width / cell)));
  ny = std::max(1, static_cast<int>(std::ceil(height / cell)));
  cells.assign(static_cast<std::size_t>(nx * ny), {});
}

std::pair<int, int> Planner::Grid::key(const Point& p) const {
  const int ix = std::clamp(static_cast<int>(std::floor(p.x() / cell)), 0, nx - 1);
  const int iy = std::clamp(static_cast<int>(std::floor(p.y() / cell)), 0, ny - 1);
  return {ix, iy};
}

void Planner::Grid::insert(int id, const Point& p) {
  const auto [ix, iy] = key(p);
  cells[static_cast<std::size_t>(iy * nx + ix)].push_back(id);
}

Planner::Planner(const Environment& env, PlannerConfig cfg) : env_(&env), cfg_(cfg) {
  if (!(cfg_.step > 0.0)) throw Error(ErrorCode::InvalidGeometry, "planner step must be positive");
  if (cfg_.neighbor_radius < cfg_.step) cfg_.neighbor_radius = cfg_.step;
  if (cfg_.iterations < 1) throw Error(ErrorCode::InvalidGeometry, "planner needs at least one iteration");
  const Workspace& ws = env.workspace();
  eps_hi_ = cfg_.eps_hi > 0.0 ? cfg_.eps_hi : std::hypot(ws.width, ws.height);
}

Point Planner::sample_free(Rng& rng) const {
  const Workspace& ws = env_->workspace();
  for (int tries = 0; tries < 100000; ++tries) {
    const Point p(rng.uniform(0.0, ws.width), rng.uniform(0.0, ws.height));
    if (env_->clearance(p) >= cfg_.delta && !env_->in_collision(p)) return p;
  }
  throw Error(ErrorCode::RejectionLimit, "no sample with clearance >= delta after 1e5 draws");
}

double Planner::edge_width(const Point& a, const Point& b) const {
  double w = eps_hi_;
  for (const EdgeCrossing& c : edge_crossings(a, b, *env_)) w = std::min(w, c.passage->width);
  return truncate_width(w);
}

PlannerNode Planner::update_node_cost(const PlannerNode& near, const Point& new_pos) const {
  PlannerNode child;
  child.pos = new_pos;
  child.length_cost = near.length_cost + (new_pos - near.pos).norm();
  child.min_passage_width = std::min(near.min_passage_width, edge_width(near.pos, new_pos));
  child.cost = node_cost(child.length_cost, child.min_passage_width);
  return child;
}

double Planner::path_min_width(const Path& path) const {
  double w = eps_hi_;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) w = std::min(w, edge_width(path.nodes()[i], path.nodes()[i + 1]));
  return w;
}

double Planner::path_cost(const Path& path) const { return node_cost(path.length(), path_min_width(path)); }

int Planner::nearest(const Point& p) const {
  const auto [cx, cy] = grid_.key(p);
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  const int max_ring = std::max(grid_.nx, grid_.ny);
  for (int ring = 0; ring <= max_ring; ++ring) {
    // Every node in ring r is at least (r - 1) cells away.
    if (best >= 0 && (ring - 1) * grid_.cell > std::sqrt(best_d)) break;
    for (int iy = cy - ring; iy <= cy + ring; ++iy) {
      if (iy < 0 || iy >= grid_.ny) continue;
      for (int ix = cx - ring; ix <= cx + ring; ++ix) {
        if (ix < 0 || ix >= grid_.nx) continue;
        if (std::max(std::abs(ix - cx), std::abs(iy - cy)) != ring) continue;
        for (int id : grid_.cells[static_cast<std::size_t>(iy * grid_.nx + ix)]) {
          const double d = (nodes_[static_cast<std::size_t>(id)].pos - p).squaredNorm();
          if (d < best_d || (d == best_d && id < best)) {
            best_d = d;
            best = id;
          }
        }
      }
    }
  }
  return best;
}

std::vector<int> Planner::near(const Point& p, double radius) const {
  std::vector<int> out;
  const auto [cx, cy] = grid_.key(p);
  const int span = static_cast<int>(std::ceil(radius / grid_.cell));
  for (int iy = std::max(0, cy - span); iy <= std::min(grid_.ny - 1, cy + span); ++iy) {
    for (int ix = std::max(0, cx - span); ix <= std::min(grid_.nx - 1, cx + span); ++ix) {
      for (int id : grid_.cells[static_cast<std::size_t>(iy * grid_.nx + ix)]) {
        if ((nodes_[static_cast<std::size_t>(id)].pos - p).norm() <= radius) out.push_back(id);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int Planner::add_node(const PlannerNode& node, double width) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  edge_width_.push_back(width);
  children_.emplace_back();
  if (node.parent >= 0) children_[static_cast<std::size_t>(node.parent)].push_back(id);
  grid_.insert(id, node.pos);
  return id;
}

bool Planner::subtree_improves(int root, const PlannerNode& updated) const {
  // Composite cost is not additive, so a cheaper node can still make a
  // descendant costlier (shorter prefix but narrower passage).
  std::vector<std::pair<int, PlannerNode>> stack{{root, updated}};
  while (!stack.empty()) {
    auto [id, node] = stack.back();
    stack.pop_back();
    for (int c : children_[static_cast<std::size_t>(id)]) {
      const PlannerNode& old = nodes_[static_cast<std::size_t>(c)];
      PlannerNode next = old;
      next.length_cost = node.length_cost + (old.pos - node.pos).norm();
      next.min_passage_width = std::min(node.min_passage_width, edge_width_[static_cast<std::size_t>(c)]);
      next.cost = node_cost(next.length_cost, next.min_passage_width);
      if (next.cost > old.cost) return false;
      stack.emplace_back(c, next);
    }
  }
  return true;
}

void Planner::propagate(int root) {
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const PlannerNode& node = nodes_[static_cast<std::size_t>(id)];
    for (int c : children_[static_cast<std::size_t>(id)]) {
      PlannerNode& child = nodes_[static_cast<std::size_t>(c)];
      const double old_cost = child.cost;
      child.length_cost = node.length_cost + (child.pos - node.pos).norm();
      child.min_passage_width = std::min(node.min_passage_width, edge_width_[static_cast<std::size_t>(c)]);
      child.cost = node_cost(child.length_cost, child.min_passage_width);
      if (observer_) observer_(c, old_cost, child.cost);
      stack.push_back(c);
    }
  }
}

void Planner::reparent(int child, int parent, const PlannerNode& updated, double width) {
  PlannerNode& node = nodes_[static_cast<std::size_t>(child)];
  auto& siblings = children_[static_cast<std::size_t>(node.parent)];
  siblings.erase(std::find(siblings.begin(), siblings.end(), child));
  node.parent = parent;
  if (observer_) observer_(child, node.cost, updated.cost);
  node.length_cost = updated.length_cost;
  node.min_passage_width = updated.min_passage_width;
  node.cost = updated.cost;
  edge_width_[static_cast<std::size_t>(child)] = width;
  children_[static_cast<std::size_t>(parent)].push_back(child);
  propagate(child);
}

Path Planner::plan(const Point& start, const Point& goal) {
  if (env_->clearance(start) < cfg_.delta || env_->in_collision(start)) {
    throw Error(ErrorCode::InvalidStart, "start is outside the delta-interior");
  }
  if (env_->clearance(goal) < cfg_.delta || env_->in_collision(goal)) {
    throw Error(ErrorCode::InvalidGoal, "goal is outside the delta-interior");
  }
  const Workspace& ws = env_->workspace();
  nodes_.clear();
  edge_width_.clear();
  children_.clear();
  grid_.init(ws.width, ws.height, cfg_.neighbor_radius);

  PlannerNode root;
  root.pos = start;
  root.min_passage_width = eps_hi_;
  root.cost = 0.0;
  add_node(root, eps_hi_);

  Rng rng(cfg_.seed);
  for (int it = 0; it < cfg_.iterations; ++it) {
    const Point sample = rng.uniform() < cfg_.goal_bias ? goal : sample_free(rng);
    const int id_nearest = nearest(sample);
    const Point from = nodes_[static_cast<std::size_t>(id_nearest)].pos;
    const double dist = (sample - from).norm();
    if (dist <= 1e-9) continue;
    const Point x_new = dist > cfg_.step ? Point(from + (sample - from) * (cfg_.step / dist)) : sample;
    if (!env_->segment_free(from, x_new, cfg_.delta)) continue;

    const std::vector<int> neighbors = near(x_new, cfg_.neighbor_radius);
    int parent = id_nearest;
    PlannerNode best = update_node_cost(nodes_[static_cast<std::size_t>(id_nearest)], x_new);
    for (int id : neighbors) {
      if (id == id_nearest) continue;
      const PlannerNode cand = update_node_cost(nodes_[static_cast<std::size_t>(id)], x_new);
      if (cand.cost < best.cost && env_->segment_free(nodes_[static_cast<std::size_t>(id)].pos, x_new, cfg_.delta)) {
        best = cand;
        parent = id;
      }
    }
    best.parent = parent;
    const int id_new = add_node(best, edge_width(nodes_[static_cast<std::size_t>(parent)].pos, x_new));

    for (int id : neighbors) {
      if (id == parent) continue;
      const PlannerNode& old = nodes_[static_cast<std::size_t>(id)];
      PlannerNode cand = update_node_cost(nodes_[static_cast<std::size_t>(id_new)], old.pos);
      if (!(cand.cost < old.cost)) continue;
      if (!env_->segment_free(x_new, old.pos, cfg_.delta)) continue;
      if (!subtree_improves(id, cand)) continue;
      reparent(id, id_new, cand, edge_width(x_new, old.pos));
    }
  }

  // Close the path exactly at the goal from the cheapest node in the goal disk.
  int best_id = -1;
  PlannerNode best_goal;
  for (int id : near(goal, cfg_.goal_radius)) {
    const PlannerNode& n = nodes_[static_cast<std::size_t>(id)];
    PlannerNode cand = (n.pos - goal).norm() <= 1e-12 ? n : update_node_cost(n, goal);
    if (best_id >= 0 && !(cand.cost < best_goal.cost)) continue;
    if (!env_->segment_free(n.pos, goal, cfg_.delta)) continue;
    best_id = id;
    best_goal = cand;
  }
  if (best_id < 0) throw Error(ErrorCode::NoPath, "goal region not reached");

  std::vector<Point> pts;
  if ((nodes_[static_cast<std::size_t>(best_id)].pos - goal).norm() > 1e-12) pts.push_back(goal);
  for (int id = best_id; id >= 0; id = nodes_[static_cast<std::size_t>(id)].parent) {
    pts.push_back(nodes_[static_cast<std::size_t>(id)].pos);
  }
  std::reverse(pts.begin(), pts.end());
  pts.back() = goal;
  if (pts.size() < 2) pts.push_back(goal);
  Path path(std::move(pts));
  path.passages = path_passage_list(path, *env_);
  return path;
}

}  // namespace dom
