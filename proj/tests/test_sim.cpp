#include <doctest.h>

#include <cmath>

#include "dom/error.hpp"
#include "dom/planner.hpp"
#include "dom/sim.hpp"
#include "fixtures.hpp"

using namespace dom;
using fixtures::box;

namespace {

DeformableBody rope(const Point& from, int n, double spacing, std::vector<int> grasps, std::vector<int> feedback) {
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) pts.push_back(from + Point(spacing * i, 0));
  return DeformableBody::chain(pts, std::move(grasps), std::move(feedback));
}

double sampled_body_distance(const DeformableBody& body, const Environment& env, double step) {
  double best = 1e300;
  for (const Spring& s : body.springs) {
    if (s.kind != SpringKind::Stretch) continue;
    const Point a = body.nodes[static_cast<std::size_t>(s.i)];
    const Point b = body.nodes[static_cast<std::size_t>(s.j)];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
    for (int k = 0; k <= n; ++k) {
      const Point p = a + (b - a) * (static_cast<double>(k) / n);
      for (const Obstacle& o : env.obstacles()) {
        const auto& poly = o.polygon();
        for (std::size_t e = 0; e < poly.size(); ++e) {
          best = std::min(best, point_segment_distance(p, poly[e], poly[(e + 1) % poly.size()]));
        }
      }
    }
  }
  return best;
}

// Inside an obstacle and more than 1e-9 from its boundary.
bool strictly_inside(const Environment& env, const Point& p) {
  for (const Obstacle& o : env.obstacles()) {
    const auto& poly = o.polygon();
    if (!point_in_convex(p, poly)) continue;
    double edge = 1e300;
    for (std::size_t e = 0; e < poly.size(); ++e) {
      edge = std::min(edge, point_segment_distance(p, poly[e], poly[(e + 1) % poly.size()]));
    }
    if (edge > 1e-9) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("body construction and validation") {
  const DeformableBody c = rope({100, 100}, 5, 10, {0}, {4});
  CHECK(c.springs.size() == 4);
  const DeformableBody g = DeformableBody::grid({0, 0}, 5, 9, 10, {0, 4}, {22});
  CHECK(g.nodes.size() == 45);
  DeformableBody bad = c;
  bad.anchors = {0};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.feedback_ids = {9};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.springs.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("zero command keeps a relaxed body") {
  const Environment env({640, 480}, {});
  const DeformableBody b = rope({100, 100}, 6, 10, {0}, {5});
  const DeformableBody n = step(b, {Point::Zero()}, 1.0, env, SimConfig{});
  for (std::size_t k = 0; k < b.nodes.size(); ++k) CHECK((n.nodes[k] - b.nodes[k]).norm() < 1e-12);
}

TEST_CASE("rigid translation of an unanchored body") {
  const Environment env({640, 480}, {});
  DeformableBody b = DeformableBody::grid({100, 100}, 5, 9, 10, {0, 4}, {22});
  const Point v(3, -2);
  const DeformableBody start = b;
  for (int t = 0; t < 20; ++t) b = step(b, {v, v}, 1.0, env, SimConfig{});
  for (std::size_t k = 0; k < b.nodes.size(); ++k) CHECK((b.nodes[k] - (start.nodes[k] + 20 * v)).norm() < 1e-3);
  const FeedbackVector s = read_feedback(b);
  CHECK((s[0] - (read_feedback(start)[0] + 20 * v)).norm() < 1e-3);
}

TEST_CASE("stretched spring returns to rest length") {
  const Environment env({640, 480}, {});
  DeformableBody b = rope({100, 100}, 2, 10, {}, {0});
  b.nodes[1] = {120, 100};
  SimConfig cfg;
  cfg.damping = 0.1;
  relax(b, env, cfg, 500);
  CHECK((b.nodes[1] - b.nodes[0]).norm() == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("quasi-static relaxation settles") {
  const Environment env({640, 480}, {Obstacle(0, box(125, 60, 200, 95))});
  DeformableBody b = DeformableBody::grid({100, 100}, 5, 9, 10, {4}, {44});
  b.anchors = {40};
  for (int t = 0; t < 15; ++t) b = step(b, {Point(1, -2)}, 1.0, env, SimConfig{});
  REQUIRE(do_obstacle_distance(b, env).distance == doctest::Approx(0.0));
  for (int t = 0; t < 50; ++t) b = step(b, {Point::Zero()}, 1.0, env, SimConfig{});
  CHECK(relax(b, env, SimConfig{}, 1) < 1e-6);
}

TEST_CASE("grasp rigidity, contact and determinism") {
  const Environment env = fixtures::fig8_env();
  const DeformableBody start = rope({120, 240}, 8, 8, {7}, {0, 7});
  Rng rng(9);
  std::vector<Point> commands;
  for (int t = 0; t < 200; ++t) commands.emplace_back(rng.uniform(-1, 4), rng.uniform(-3, 3));
  auto run = [&](std::vector<DeformableBody>* trace) {
    DeformableBody b = start;
    Point r = start.nodes[7];
    for (const Point& c : commands) {
      b = step(b, {c}, 1.0, env, SimConfig{});
      r += c;
      if (trace) trace->push_back(b);
      CHECK(b.nodes[7] == r);
      for (int k = 0; k < 7; ++k) CHECK_FALSE(strictly_inside(env, b.nodes[static_cast<std::size_t>(k)]));
    }
  };
  std::vector<DeformableBody> a, c;
  run(&a);
  run(&c);
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t k = 0; k < a[t].nodes.size(); ++k) CHECK(a[t].nodes[k] == c[t].nodes[k]);
  }
}

TEST_CASE("read_feedback") {
  const Environment env({640, 480}, {});
  const DeformableBody b = rope({100, 100}, 4, 10, {0, 3}, {0, 3});
  const FeedbackVector s = read_feedback(b);
  CHECK(s[0] == b.nodes[0]);
  CHECK(s[1] == b.nodes[3]);
  const DeformableBody m = step(b, {Point(5, 5), Point(5, 5)}, 1.0, env, SimConfig{});
  CHECK((read_feedback(m)[1] - (s[1] + Point(5, 5))).norm() < 1e-9);
  CHECK(read_feedback(DeformableBody::chain({{0, 0}, {10, 0}, {20, 0}}, {0}, {0, 1, 2})).size() ==
        FeatureDef::point_angle().points);
}

TEST_CASE("DO-obstacle distance") {
  const Environment env({640, 480}, {Obstacle(0, box(200, 200, 250, 250))});
  const DeformableBody touching = DeformableBody::chain({{150, 220}, {200, 220}}, {0}, {0});
  CHECK(do_obstacle_distance(touching, env).distance == doctest::Approx(0.0));
  const DeformableBody single = DeformableBody::chain({{175, 225}}, {}, {0});
  CHECK(do_obstacle_distance(single, env).distance == doctest::Approx(25.0));

  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point> pts{{rng.uniform(150, 300), rng.uniform(150, 300)}};
    if (env.in_collision(pts.front())) continue;
    for (int i = 0; i < 5; ++i) {
      Point next;
      do {
        next = pts.back() + Point(rng.uniform(-20, 20), rng.uniform(-20, 20));
      } while (!env.segment_free(pts.back(), next, 0.0));
      pts.push_back(next);
    }
    const DeformableBody b = DeformableBody::chain(pts, {0}, {0});
    const DoDistance d = do_obstacle_distance(b, env);
    CHECK(std::abs(d.distance - sampled_body_distance(b, env, 0.25)) <= 0.5);
    CHECK((d.on_body - d.on_obstacle).norm() == doctest::Approx(d.distance));
  }
}

TEST_CASE("nearest feedback along the chain") {
  const DeformableBody b = DeformableBody::chain({{0, 0}, {10, 0}, {20, 0}, {20, 10}, {10, 10}, {0, 10}}, {0}, {0, 5});
  CHECK(nearest_feedback(b, 1) == 0);
  CHECK(nearest_feedback(b, 4) == 1);
}

TEST_CASE("shape measure") {
  const FeedbackVector s0{{100, 100}, {200, 100}, {100, 150}};
  DeformableBody b = DeformableBody::chain({{200, 100}, {100, 100}, {100, 150}}, {0, 2}, {1, 0, 2});
  CHECK(shape_measure(b, s0).isZero());
  b.nodes[0] = {202, 100};
  CHECK(shape_measure(b, s0)[0] == doctest::Approx(0.02));
  const ShapeConstraintDef bound = side_length_bound(0.02);
  b.nodes[0] = {202.1, 100};
  CHECK_FALSE(bound.satisfied(s0, read_feedback(b)));
}

TEST_CASE("affine plant") {
  Eigen::MatrixXd a(4, 2);
  a << 1, 0.5, 0, 1, 2, 0, -1, 1;
  AffinePlant plant(a, Eigen::Vector4d(10, 20, 30, 40), {{1, 2}});
  FeedbackVector s = plant.feedback();
  CHECK(s[0].isApprox(Point(12, 22)));
  plant.command({{1, 0}}, Environment({640, 480}, {}));
  s = plant.feedback();
  CHECK(s[1].isApprox(Point(34, 40)));
}
