#include <doctest.h>

#include <cmath>

#include "dom/error.hpp"
#include "dom/planner.hpp"
#include "dom/targeting.hpp"
#include "fixtures.hpp"

using namespace dom;
using fixtures::box;

namespace {

constexpr double kDeg = M_PI / 180.0;

Eigen::MatrixXd finite_difference(const FeatureDef& def, const FeedbackVector& s, double h) {
  const int m = def.m();
  Eigen::MatrixXd j(m, 2 * static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int c = 0; c < 2; ++c) {
      FeedbackVector p = s, q = s;
      p[i][c] += h;
      q[i][c] -= h;
      j.col(2 * static_cast<Eigen::Index>(i) + c) = (feature_eval(def, p) - feature_eval(def, q)) / (2 * h);
    }
  }
  return j;
}

FeedbackVector rigid(const FeedbackVector& s, double angle, const Point& about, const Point& shift) {
  const Eigen::Rotation2Dd r(angle);
  FeedbackVector out;
  for (const Point& p : s) out.emplace_back(r * (p - about) + about + shift);
  return out;
}

}  // namespace

TEST_CASE("feature_eval") {
  const FeatureDef pa = FeatureDef::point_angle();
  CHECK(feature_eval(pa, {{0, 0}, {1, 0}, {0, 1}})[2] == doctest::Approx(M_PI / 2));
  CHECK(feature_eval(pa, {{0, 0}, {1, 0}, {3, 0}})[2] == doctest::Approx(0.0));
  CHECK_THROWS_WITH_AS(feature_eval(pa, {{0, 0}, {0, 0}, {0, 1}}), doctest::Contains("DegenerateAngle"), Error);
  const Eigen::VectorXd y = feature_eval(FeatureDef::single_point(), {{4, 5}});
  CHECK(y == Eigen::Vector2d(4, 5));
}

TEST_CASE("feature_jacobian") {
  const FeatureDef sp = FeatureDef::single_point(2);
  const Eigen::MatrixXd js = feature_jacobian(sp, {{1, 2}, {3, 4}});
  CHECK(js.block<2, 2>(0, 0).isIdentity());
  CHECK(js.block<2, 2>(0, 2).isZero());

  const FeatureDef pa = FeatureDef::point_angle();
  const FeedbackVector right{{0, 0}, {1, 0}, {0, 1}};
  CHECK((feature_jacobian(pa, right) - finite_difference(pa, right, 1e-5)).cwiseAbs().maxCoeff() < 1e-6);

  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    FeedbackVector s;
    for (int i = 0; i < 3; ++i) s.emplace_back(rng.uniform(0, 100), rng.uniform(0, 100));
    if (std::abs(cross(s[1] - s[0], s[2] - s[0])) < 50) continue;
    const Eigen::MatrixXd j = feature_jacobian(pa, s);
    CHECK((j - finite_difference(pa, s, 1e-5)).cwiseAbs().maxCoeff() < 1e-6);
    const Eigen::Vector2d sides = j.block<1, 2>(2, 2).transpose() + j.block<1, 2>(2, 4).transpose();
    CHECK((sides + j.block<1, 2>(2, 0).transpose()).norm() < 1e-12);
  }
}

TEST_CASE("select_pivot") {
  CHECK(select_pivot(FeatureDef::single_point(), {{3, 3}}) == 0);

  FeatureDef pa = FeatureDef::point_angle();
  pa.complete_indices = {0, 1, 2};
  const FeedbackVector s{{200, 200}, {260, 200}, {200, 140}};
  const Eigen::MatrixXd j = finite_difference(pa, s, 1e-4);
  int oracle = 0;
  for (int i = 1; i < 3; ++i) {
    if (j.middleCols(2 * i, 2).squaredNorm() > j.middleCols(2 * oracle, 2).squaredNorm() + 1e-9) oracle = i;
  }
  CHECK(select_pivot(pa, s) == oracle);
  CHECK(oracle == 0);

  FeatureDef twin;
  twin.kind = FeatureKind::Custom;
  twin.points = 2;
  twin.dimension = 2;
  twin.complete_indices = {0, 1};
  twin.eval = [](const FeedbackVector& v) { return Eigen::Vector2d(v[0] + v[1]); };
  CHECK(select_pivot(twin, {{0, 0}, {5, 5}}) == 0);

  SUBCASE("argmax invariant under scaling") {
    Rng rng(8);
    FeatureDef all = FeatureDef::point_angle();
    all.complete_indices = {0, 1, 2};
    for (int trial = 0; trial < 50; ++trial) {
      FeedbackVector v;
      for (int i = 0; i < 3; ++i) v.emplace_back(rng.uniform(0, 100), rng.uniform(0, 100));
      if (std::abs(cross(v[1] - v[0], v[2] - v[0])) < 100) continue;
      const double scale = rng.uniform(0.5, 3.0);
      FeedbackVector scaled;
      for (const Point& p : v) scaled.push_back(scale * p);
      CHECK(select_pivot(all, v) == select_pivot(all, scaled));
    }
  }
}

TEST_CASE("reference_distribution") {
  const FeedbackVector s0{{100, 100}, {150, 100}, {100, 160}};
  SUBCASE("one complete point translates") {
    const FeedbackVector ref = reference_distribution(s0, {{0, {300, 200}}}, 0);
    CHECK(ref[1].isApprox(Point(350, 200)));
    CHECK(ref[2].isApprox(Point(300, 260)));
  }
  SUBCASE("two complete points recover the rotation") {
    const double a = 30 * kDeg;
    const FeedbackVector moved = rigid(s0, a, s0[0], {40, 10});
    CHECK(procrustes_angle(s0, {{0, moved[0]}, {1, moved[1]}}, 0) == doctest::Approx(a).epsilon(1e-12));
    CHECK(std::abs(procrustes_angle(s0, {{0, moved[0]}, {1, moved[1]}}, 0) - a) < 1e-9);
  }
  SUBCASE("unchanged targets reproduce the start") {
    const FeedbackVector ref = reference_distribution(s0, {{0, s0[0]}, {1, s0[1]}}, 0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(ref[i].isApprox(s0[i]));
  }
  SUBCASE("exact for rigid motions") {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      FeedbackVector s;
      for (int i = 0; i < 5; ++i) s.emplace_back(rng.uniform(0, 400), rng.uniform(0, 400));
      const FeedbackVector moved =
          rigid(s, rng.uniform(-M_PI, M_PI), s[1], {rng.uniform(-50, 50), rng.uniform(-50, 50)});
      const FeedbackVector ref = reference_distribution(s, {{1, moved[1]}, {3, moved[3]}}, 1);
      for (std::size_t i = 0; i < s.size(); ++i) CHECK((ref[i] - moved[i]).norm() < 1e-9);
    }
  }
}

TEST_CASE("evaluate_candidate") {
  const Environment env({640, 480}, {Obstacle(0, box(300, 200, 340, 280))});
  TargetProblem pb;
  pb.s0 = {{100, 100}, {150, 100}};
  pb.reference = {{100, 100}, {200, 240}};
  pb.incomplete = {1};
  CHECK(evaluate_candidate(pb, pb.reference, env, 0.0) == 0.0);
  CHECK(evaluate_candidate(pb, pb.reference, env, 1.0) == doctest::Approx(-env.clearance({200, 240})));
  const FeedbackVector s{{100, 100}, {290, 240}};  // 90 from the reference, 10 from the box
  CHECK(env.clearance(s[1]) == doctest::Approx(10.0));
  CHECK(evaluate_candidate(pb, s, env, 0.5) == doctest::Approx(0.5 * 90 - 0.5 * 10));
}

TEST_CASE("shape measure bounds") {
  const FeedbackVector s0{{0, 0}, {100, 0}, {0, 50}};
  CHECK(side_length_change(s0, s0).isZero());
  const FeedbackVector stretched{{0, 0}, {102, 0}, {0, 50}};
  CHECK(side_length_change(s0, stretched)[0] == doctest::Approx(0.02));
  const ShapeConstraintDef bound = side_length_bound(0.02);
  CHECK(bound.satisfied(s0, stretched));
  CHECK_FALSE(bound.satisfied(s0, {{0, 0}, {102.1, 0}, {0, 50}}));
}

TEST_CASE("determine_target") {
  const Environment env({640, 480}, {Obstacle(0, box(300, 200, 340, 280))});
  const TargetConfig cfg;

  SUBCASE("single point is fully determined") {
    const FeedbackVector sd = determine_target({{100, 100}}, Eigen::Vector2d(500, 400), env,
                                               FeatureDef::single_point(), ShapeConstraintDef{}, cfg);
    CHECK(sd[0] == Point(500, 400));
  }
  SUBCASE("point angle with side-length bound") {
    const FeedbackVector s0{{100, 300}, {160, 300}, {100, 240}};
    const Eigen::Vector3d y_d(450, 360, 120 * kDeg);
    const ShapeConstraintDef shape = side_length_bound(0.02);
    const FeedbackVector sd = determine_target(s0, y_d, env, FeatureDef::point_angle(), shape, cfg);
    CHECK(std::abs(vertex_angle(sd) - y_d[2]) < 1e-6);
    CHECK(sd[0] == Point(450, 360));
    const Eigen::VectorXd h = side_length_change(s0, sd);
    CHECK(h.cwiseAbs().maxCoeff() <= 0.02 + 1e-12);
    CHECK(target_feasible(FeatureDef::point_angle(), shape, s0, sd, env));
  }
  SUBCASE("vertex inside an obstacle") {
    const FeedbackVector s0{{100, 300}, {160, 300}, {100, 240}};
    CHECK_THROWS_WITH_AS(determine_target(s0, Eigen::Vector3d(320, 240, M_PI / 2), env, FeatureDef::point_angle(),
                                          side_length_bound(0.02), cfg),
                         doctest::Contains("NoFeasibleTarget"), Error);
  }
  SUBCASE("deterministic") {
    const FeedbackVector s0{{100, 300}, {160, 300}, {100, 240}};
    const Eigen::Vector3d y_d(320, 330, 100 * kDeg);
    const FeedbackVector a = determine_target(s0, y_d, env, FeatureDef::point_angle(), side_length_bound(0.02), cfg);
    const FeedbackVector b = determine_target(s0, y_d, env, FeatureDef::point_angle(), side_length_bound(0.02), cfg);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("determine_target properties over random instances") {
  const Environment env({640, 480}, {Obstacle(0, box(280, 180, 360, 300)), Obstacle(1, box(80, 380, 160, 440))});
  const FeatureDef def = FeatureDef::point_angle();
  const ShapeConstraintDef shape = side_length_bound(0.02);
  Rng rng(13);
  int checked_reference = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Point v(rng.uniform(60, 580), rng.uniform(60, 420));
    if (env.clearance(v) < 5) continue;
    const double a0 = rng.uniform(60, 150) * kDeg;
    const double phi = rng.uniform(-M_PI, M_PI);
    const double l2 = rng.uniform(30, 60), l3 = rng.uniform(30, 60);
    const FeedbackVector s0{{320, 60}, Point(320, 60) + l2 * Point(std::cos(phi), std::sin(phi)),
                            Point(320, 60) + l3 * Point(std::cos(phi + a0), std::sin(phi + a0))};
    const bool keep_angle = trial % 2 == 0;
    const double ad = keep_angle ? a0 : rng.uniform(60, 150) * kDeg;
    const Eigen::Vector3d y_d(v.x(), v.y(), ad);
    FeedbackVector sd;
    try {
      sd = determine_target(s0, y_d, env, def, shape, TargetConfig{});
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoFeasibleTarget);
      continue;
    }
    CHECK((feature_eval(def, sd) - y_d).norm() < 1e-6);
    CHECK(target_feasible(def, shape, s0, sd, env));

    TargetProblem pb;
    pb.s0 = s0;
    pb.reference = reference_distribution(s0, {{0, sd[0]}}, 0);
    pb.incomplete = {1, 2};
    if (keep_angle && target_feasible(def, shape, s0, pb.reference, env)) {
      ++checked_reference;
      CHECK(evaluate_candidate(pb, sd, env, 0.5) <= evaluate_candidate(pb, pb.reference, env, 0.5) + 1e-9);
    }
  }
  CHECK(checked_reference > 0);
}
