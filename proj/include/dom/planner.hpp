#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "dom/path.hpp"
#include "dom/workspace.hpp"

namespace dom {

enum class CostMode { Length, Composite };

struct PlannerConfig {
  int iterations = 3000;
  double step = 20.0;
  double neighbor_radius = 50.0;
  double delta = 5.0;
  double goal_radius = 20.0;
  std::uint64_t seed = 0;
  CostMode cost_mode = CostMode::Length;
  double eps_hi = 0.0;  // <= 0 selects the workspace diagonal
  double eps_lo = 1e-3;
  double f_lo = 0.0;
  double goal_bias = 0.05;
};

struct PlannerNode {
  Point pos = Point::Zero();
  int parent = -1;
  double length_cost = 0.0;
  /// Truncated narrowest passage on the way from the root.
  double min_passage_width = 0.0;
  double cost = 0.0;
};

/// Deterministic 64-bit generator with a platform-independent unit draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Passage crossing of a straight edge, `t` measured along the edge.
struct EdgeCrossing {
  const Passage* passage = nullptr;
  double t = 0.0;
  Point point = Point::Zero();
};

/// Valid passages whose witness segment meets [a, b], ordered along the edge.
std::vector<EdgeCrossing> edge_crossings(const Point& a, const Point& b, const Environment& env);
std::vector<Passage> edge_passages(const Point& a, const Point& b, const Environment& env);

/// Crossings of every passage along the path, in order of increasing tau.
PassageRecord path_passage_list(const Path& path, const Environment& env);

class Planner {
 public:
  Planner(const Environment& env, PlannerConfig cfg);

  /// RRT* from start into the goal disk; the returned path ends exactly at
  /// `goal` and carries its passage record.
  Path plan(const Point& start, const Point& goal);

  Point sample_free(Rng& rng) const;
  PlannerNode update_node_cost(const PlannerNode& near, const Point& new_pos) const;
  /// Cost of a whole polyline under the configured mode.
  double path_cost(const Path& path) const;
  double path_min_width(const Path& path) const;

  /// f_P truncation: widths at or below f_lo collapse to eps_lo.
  double truncate_width(double w) const { return w <= cfg_.f_lo ? cfg_.eps_lo : w; }
  double node_cost(double length, double width) const {
    return cfg_.cost_mode == CostMode::Composite ? length / width : length;
  }

  const std::vector<PlannerNode>& tree() const { return nodes_; }
  /// Called with (node id, old cost, new cost) whenever rewiring touches a node.
  void set_rewire_observer(std::function<void(int, double, double)> f) { observer_ = std::move(f); }
  const PlannerConfig& config() const { return cfg_; }
  double eps_hi() const { return eps_hi_; }

 private:
  struct Grid {
    double cell = 1.0;
    int nx = 1;
    int ny = 1;
    std::vector<std::vector<int>> cells;
    void init(double width, double height, double cell_size);
    std::pair<int, int> key(const Point& p) const;
    void insert(int id, const Point& p);
  };

  int nearest(const Point& p) const;
  std::vector<int> near(const Point& p, double radius) const;
  int add_node(const PlannerNode& node, double edge_width);
  void reparent(int child, int parent, const PlannerNode& updated, double edge_width);
  bool subtree_improves(int root, const PlannerNode& updated) const;
  void propagate(int root);
  double edge_width(const Point& a, const Point& b) const;

  const Environment* env_;
  PlannerConfig cfg_;
  double eps_hi_ = 0.0;
  std::vector<PlannerNode> nodes_;
  std::vector<double> edge_width_;
  std::vector<std::vector<int>> children_;
  Grid grid_;
  std::function<void(int, double, double)> observer_;
};

}  // namespace dom
