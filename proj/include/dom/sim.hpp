#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dom/targeting.hpp"
#include "dom/workspace.hpp"

namespace dom {

enum class SpringKind { Stretch, Bend };

struct Spring {
  int i = 0;
  int j = 0;
  double rest = 0.0;
  double stiffness = 1.0;
  SpringKind kind = SpringKind::Stretch;
};

enum class Topology { Chain, Grid };

struct DeformableBody {
  std::vector<Point> nodes;
  std::vector<Spring> springs;
  std::vector<int> anchors;
  std::vector<int> grasps;
  std::vector<int> feedback_ids;
  Topology topology = Topology::Chain;

  /// Chain through `points`. Bending springs join i and i+2 except across
  /// the nodes listed in `hinges`; zero bending stiffness adds none.
  static DeformableBody chain(std::vector<Point> points, std::vector<int> grasps, std::vector<int> feedback,
                              double bending = 0.0, std::vector<int> hinges = {});
  /// nx * ny grid with structural and shear springs; node id = iy * nx + ix.
  static DeformableBody grid(const Point& origin, int nx, int ny, double spacing, std::vector<int> grasps,
                             std::vector<int> feedback);

  /// Throws InvalidGeometry when an invariant is broken.
  void validate() const;
  bool pinned(int id) const;
};

struct SimConfig {
  int iterations = 60;
  double damping = 1.0;
  double stiffness_scale = 1.0;
  double dt = 1.0;
  std::uint64_t seed = 0;
};

/// Moves grasp nodes by rdot * dt exactly, extends the motion harmonically
/// over the spring graph, relaxes the springs and pushes free nodes out of
/// obstacles.
DeformableBody step(const DeformableBody& body, const std::vector<Point>& rdot, double dt, const Environment& env,
                    const SimConfig& cfg);
/// Spring relaxation only; returns the largest node displacement of the
/// last iteration.
double relax(DeformableBody& body, const Environment& env, const SimConfig& cfg, int iterations);

FeedbackVector read_feedback(const DeformableBody& body);

struct DoDistance {
  double distance = 0.0;
  Point on_body = Point::Zero();      // p_o
  Point on_obstacle = Point::Zero();  // nearest obstacle point
  int node = -1;                      // body node nearest to p_o
};
/// Minimum over nodes and stretch springs against all obstacles.
DoDistance do_obstacle_distance(const DeformableBody& body, const Environment& env);

/// Feedback index closest to `node` along the stretch-spring graph.
int nearest_feedback(const DeformableBody& body, int node);

/// Built-in side-length change ratio against the reference feedback s0.
Eigen::VectorXd shape_measure(const DeformableBody& body, const FeedbackVector& s0);

/// Read-command interface shared by the spring body and the affine plant.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual FeedbackVector feedback() const = 0;
  virtual std::vector<Point> handles() const = 0;
  virtual void command(const std::vector<Point>& rdot, const Environment& env) = 0;
  virtual DoDistance distance(const Environment& env) const = 0;
  /// Feedback index to use for the DO-obstacle gradient.
  virtual int witness_feedback(const DoDistance& d) const = 0;
  int handle_count() const { return static_cast<int>(handles().size()); }
};

class BodyPlant : public Plant {
 public:
  BodyPlant(DeformableBody body, SimConfig cfg);
  FeedbackVector feedback() const override { return read_feedback(body_); }
  std::vector<Point> handles() const override;
  void command(const std::vector<Point>& rdot, const Environment& env) override;
  DoDistance distance(const Environment& env) const override { return do_obstacle_distance(body_, env); }
  int witness_feedback(const DoDistance& d) const override { return nearest_feedback(body_, d.node); }
  const DeformableBody& body() const { return body_; }

 private:
  DeformableBody body_;
  SimConfig cfg_;
};

/// S = A r + b with r the stacked handle positions.
class AffinePlant : public Plant {
 public:
  AffinePlant(Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<Point> r);
  FeedbackVector feedback() const override;
  std::vector<Point> handles() const override { return r_; }
  void command(const std::vector<Point>& rdot, const Environment& env) override;
  DoDistance distance(const Environment& env) const override;
  int witness_feedback(const DoDistance& d) const override { return d.node; }
  const Eigen::MatrixXd& map() const { return a_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  std::vector<Point> r_;
};

}  // namespace dom
