#include <doctest.h>

#include <cmath>

#include "dom/control.hpp"
#include "dom/error.hpp"
#include "fixtures.hpp"

using namespace dom;
using fixtures::box;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-2, 2);
  }
  return m;
}

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-3, 3);
  return v;
}

struct RopeRun {
  RunResult result;
  PathSet set;
};

// Six-node rope grasped at its tail, steered by its head from y = 240 at
// x = 110 to (560, 240) through the wall fixture.
RopeRun rope_through_wall(double gap) {
  const Environment env = fixtures::wall_env(gap);
  std::vector<Point> pts;
  for (int i = 0; i < 6; ++i) pts.emplace_back(60 + 10 * i, 240);
  BodyPlant plant(DeformableBody::chain(pts, {0}, {5}), SimConfig{});
  Task task;
  task.feature = FeatureDef::single_point();
  task.s0 = plant.feedback();
  task.y_d = Eigen::Vector2d(560, 240);
  task.s_d = {Point(560, 240)};
  RopeRun out;
  out.set = generate_path_set(task.s0, task.s_d, 0, env, PathSetConfig{});
  const RiskySegments risky = risky_segments(out.set.paths[0], crossing_chords(out.set.paths[0], out.set.paths, 0));
  Controller ctl(out.set, risky, task, env, ControlConfig{});
  out.result = ctl.run(plant);
  return out;
}

}  // namespace

TEST_CASE("Broyden update") {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 2);
  CHECK(broyden_update(j, Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 3), 1.0));
  CHECK(j.isApprox((Eigen::Matrix2d() << 2, 0, 3, 0).finished()));
  const Eigen::MatrixXd before = j;
  CHECK_FALSE(broyden_update(j, Eigen::Vector2d(1e-10, 0), Eigen::Vector2d(5, 5), 1.0));
  CHECK(j == before);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd m = random_matrix(rng, 4, 2);
    const Eigen::VectorXd dr = random_vector(rng, 2);
    const Eigen::VectorXd ds = random_vector(rng, 4);
    broyden_update(m, dr, ds, 1.0);
    CHECK((m * dr - ds).norm() < 1e-9);
  }
}

TEST_CASE("Broyden identifies an affine plant") {
  Rng rng(5);
  const Eigen::MatrixXd a = random_matrix(rng, 6, 4);
  AffinePlant plant(a, random_vector(rng, 6), {{100, 100}, {200, 100}});
  const Environment env({640, 480}, {});
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, 4);
  for (int t = 0; t < 400; ++t) {
    const Eigen::VectorXd s = stack(plant.feedback());
    const Eigen::VectorXd dr = random_vector(rng, 4);
    plant.command(unstack(dr), env);
    broyden_update(j, dr, stack(plant.feedback()) - s, 1.0);
  }
  CHECK((j - a).norm() < 1e-6);

  // Finite-difference initialization is exact on an affine map.
  PathSet set;
  set.paths = {Path({{0, 0}, {10, 0}}), Path({{0, 5}, {10, 5}}), Path({{0, 9}, {10, 9}})};
  Task task;
  task.feature = FeatureDef::single_point(3);
  task.s0 = plant.feedback();
  task.s_d = task.s0;
  task.y_d = Eigen::Vector2d::Zero();
  Controller ctl(set, {}, task, env, ControlConfig{});
  ctl.initialize(plant);
  CHECK((ctl.jacobian() - a).norm() < 1e-8);
}

TEST_CASE("pseudoinverse satisfies the Penrose conditions") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd m = random_matrix(rng, 5, 3);
    if (trial % 2 == 0) m.col(2) = m.col(0) * 2.0;
    const Eigen::MatrixXd p = pseudo_inverse(m);
    CHECK((m * p * m - m).norm() < 1e-9);
    CHECK((p * m * p - p).norm() < 1e-9);
    CHECK(((m * p).transpose() - m * p).norm() < 1e-9);
    CHECK(((p * m).transpose() - p * m).norm() < 1e-9);
  }
  CHECK(pseudo_inverse(Eigen::MatrixXd::Zero(2, 3)).isZero());
}

TEST_CASE("projection onto the path set") {
  const std::vector<Path> paths{Path({{0, 0}, {100, 0}}), Path({{0, 20}, {100, 20}})};
  const auto proj = project_onto_pathset({Point(50, 7), Point(30, 13)}, paths);
  CHECK(proj.tau[0] == doctest::Approx(0.5));
  CHECK(proj.error[0].isApprox(Point(0, 7)));
  CHECK(proj.tau[1] == doctest::Approx(0.3));
  CHECK(proj.error[1].isApprox(Point(0, -7)));

  PathTracker tracker(paths, 0);
  CHECK(tracker.paths()[0].size() >= 500);
  tracker.project({Point(60, 0), Point(60, 20)}, true);
  const auto back = tracker.project({Point(40, 0), Point(40, 20)}, true);
  CHECK(back.tau[0] == doctest::Approx(0.6));
  CHECK(tracker.pivot_tau() == doctest::Approx(0.6));
  tracker.reset_window();
  CHECK(tracker.project({Point(40, 0), Point(40, 20)}, true).tau[0] == doctest::Approx(0.4));
}

TEST_CASE("monotone projection never moves back") {
  const Path p({{0, 0}, {100, 0}, {100, 100}, {0, 100}});
  PathTracker tracker({p}, 0);
  Rng rng(2);
  double last = 0.0;
  for (int t = 0; t < 300; ++t) {
    const double tau = std::min(1.0, t / 250.0) + rng.uniform(-0.05, 0.05);
    const Point s = p.at(std::clamp(tau, 0.0, 1.0)) + Point(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const double now = tracker.project({s}, true).tau[0];
    CHECK(now >= last);
    last = now;
  }
}

TEST_CASE("tracking error") {
  const std::vector<Path> paths{Path({{0, 0}, {100, 0}}), Path({{0, 20}, {100, 20}})};
  const FeedbackVector s{Point(10, 0), Point(10, 20)};
  const Eigen::VectorXd e = tracking_error(s, paths, 0, 0.1, 0.05);
  CHECK(e.isApprox(Eigen::Vector4d(-5, 0, -5, 0)));
  const Eigen::VectorXd sat = tracking_error(s, paths, 0, 0.99, 0.05);
  CHECK(sat.isApprox(Eigen::Vector4d(-90, 0, -90, 0)));

  Eigen::VectorXd conflict(4);
  conflict << 3, 0, -2, 1;
  const Eigen::VectorXd fixed = remove_conflicts(conflict, 0, -0.5);
  CHECK(fixed.isApprox(Eigen::Vector4d(3, 0, 0, 1)));
  conflict << 3, 0, 1, 2;
  CHECK(remove_conflicts(conflict, 0, -0.5) == conflict);
}

TEST_CASE("tracking command") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  CHECK(tracking_command(Eigen::Vector2d(1, -2), id, id, 4.0).isApprox(Eigen::Vector2d(-1, 2)));
  CHECK(tracking_command(Eigen::Vector2d::Zero(), id, id, 4.0).isZero());
  CHECK(tracking_command(Eigen::Vector2d(30, 40), id, id, 4.0).norm() == doctest::Approx(4.0));

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd j = random_matrix(rng, 6, 2);
    const Eigen::VectorXd e = random_vector(rng, 6) * 0.1;
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(6, 6) * 0.5;
    const Eigen::VectorXd normal = -(j.transpose() * j).ldlt().solve(j.transpose() * (k * e));
    CHECK((tracking_command(e, j, k, 1e9) - normal).norm() < 1e-9);
  }
}

TEST_CASE("velocity clamp") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd v = random_vector(rng, 4) * rng.uniform(0, 5);
    const Eigen::VectorXd c = clamp_norm(v, 4.0);
    CHECK(c.norm() <= 4.0 + 1e-12);
    if (v.norm() <= 4.0) CHECK(c == v);
    else CHECK(c.normalized().isApprox(v.normalized()));
  }
}

TEST_CASE("constraint command examples") {
  const Environment env({640, 480}, {Obstacle(0, box(120, 50, 200, 150))});
  ConstraintInputs in;
  in.r = {Point(100, 100)};
  in.s = {Point(60, 100)};
  in.s0 = in.s;
  in.do_distance.distance = 60;
  in.do_distance.on_body = Point(60, 100);
  in.do_distance.on_obstacle = Point(120, 100);
  const Eigen::MatrixXd j_d = Eigen::MatrixXd::Identity(2, 2);
  const ConstraintConfig cfg;
  const ConstraintCommands c = constraint_commands(in, env, j_d, ShapeConstraintDef{}, cfg);
  CHECK(c.d_ee == doctest::Approx(20));
  CHECK(c.f2 == doctest::Approx(2000.0 / 800.0));
  CHECK(c.rdot_c2.isApprox(Eigen::Vector2d(-0.25, 0)));
  CHECK(c.f1 == doctest::Approx(2000.0 / 7200.0));
  CHECK(c.rdot_c1.isApprox(Eigen::Vector2d(-18, 0)));
  CHECK(c.rdot_c3.isZero());
  CHECK(c.rdot_c1.norm() <= cfg.k_c1 * c.d_do * j_d.norm() + 1e-9);

  ConstraintInputs touching = in;
  touching.r = {Point(120, 100)};
  CHECK_THROWS_AS(constraint_commands(touching, env, j_d, ShapeConstraintDef{}, cfg), Error);
  touching = in;
  touching.do_distance.distance = 0;
  CHECK_THROWS_AS(constraint_commands(touching, env, j_d, ShapeConstraintDef{}, cfg), Error);

  // Shape term drives the side ratio back towards the centre of its band.
  ConstraintInputs shaped;
  shaped.s0 = {Point(0, 0), Point(100, 0), Point(0, 100)};
  shaped.s = {Point(0, 0), Point(110, 0), Point(0, 100)};
  shaped.r = {Point(300, 300)};
  shaped.do_distance.distance = 1e9;
  Eigen::MatrixXd jd = Eigen::MatrixXd::Zero(6, 2);
  jd(2, 0) = 1;
  jd(3, 1) = 1;
  const ConstraintCommands sc =
      constraint_commands(shaped, Environment({640, 480}, {}), jd, side_length_bound(0.02), cfg);
  CHECK(sc.f3 > 0);
  CHECK(sc.rdot_c3[0] < 0);
}

TEST_CASE("cascaded commands respect higher-priority nullspaces") {
  Rng rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    ConstraintCommands c;
    c.g1 = random_vector(rng, 4);
    c.g2 = random_vector(rng, 4);
    c.g3 = random_vector(rng, 4);
    c.rdot_c1 = random_vector(rng, 4);
    c.rdot_c2 = random_vector(rng, 4);
    c.rdot_c3 = random_vector(rng, 4);
    const Eigen::VectorXd task = random_vector(rng, 4);
    const Eigen::VectorXd all = constrained_command(c, {true, true, true}, task);
    CHECK(std::abs(c.g2.normalized().dot(all - c.rdot_c2)) < 1e-9);
    const Eigen::VectorXd no2 = constrained_command(c, {true, false, true}, task);
    CHECK(std::abs(c.g1.normalized().dot(no2 - c.rdot_c1)) < 1e-9);
  }
  ConstraintCommands z;
  z.rdot_c1 = z.rdot_c2 = z.rdot_c3 = z.g1 = z.g2 = z.g3 = Eigen::VectorXd::Zero(2);
  CHECK(constrained_command(z, {true, true, true}, Eigen::Vector2d(1, 2)).isApprox(Eigen::Vector2d(1, 2)));
}

TEST_CASE("end-effector escape path") {
  const Environment env = fixtures::wall_env(24);
  const Path pivot({{110, 240}, {560, 240}});
  const RiskySegments risky{{0.40, 0.52}};
  const Point r_now(240, 244);
  const double tau_now = 0.4;
  EscapeConfig cfg;
  const Path ee = plan_ee_escape(r_now, pivot, tau_now, risky, env, cfg);
  CHECK(ee.front() == r_now);
  const double tau_end = pivot.project(ee.back() - (r_now - pivot.at(tau_now)));
  CHECK(tau_end > 0.52);
  CHECK(env.clearance(ee.back()) > cfg.d0);
  for (std::size_t k = 0; k + 1 < ee.size(); ++k) CHECK(env.segment_free(ee.nodes()[k], ee.nodes()[k + 1], 0.0));
  CHECK(homotopic_like(pivot.sub(tau_now, tau_end), ee, env));

  // Every candidate beyond the risky region sits in a wall.
  const Environment closed({640, 480}, {Obstacle(0, box(300, 0, 340, 480))});
  CHECK_THROWS_AS(plan_ee_escape(Point(290, 244), Path({{110, 244}, {330, 244}}), 0.5, {}, closed, cfg), Error);
  CHECK_THROWS_AS(plan_ee_escape(Point(320, 100), pivot, tau_now, risky, closed, cfg), Error);
}

TEST_CASE("mode machine reaches final_fix in open space") {
  const RopeRun run = rope_through_wall(160);
  const RunResult& r = run.result;
  CHECK(r.success);
  CHECK(r.stuck_events.empty());
  REQUIRE(r.mode_sequence.back() == Mode::FinalFix);
  for (const Telemetry& t : r.telemetry) {
    if (t.mode == Mode::FinalFix) {
      CHECK(t.target_error < 20.0);
      break;
    }
  }
  CHECK(r.final_point_error < 5.0);
}

TEST_CASE("violation streak triggers an end-effector escape") {
  const RopeRun run = rope_through_wall(24);
  const RunResult& r = run.result;
  REQUIRE_FALSE(r.stuck_events.empty());
  CHECK(r.stuck_streak_at_trigger == 6);
  bool escape_after_adjust = false;
  for (std::size_t k = 1; k < r.mode_sequence.size(); ++k) {
    if (r.mode_sequence[k] == Mode::TrackEeEscape) escape_after_adjust |= r.mode_sequence[k - 1] == Mode::AdjustConstraints;
  }
  CHECK(escape_after_adjust);
  CHECK_FALSE(r.relaxed_c1.empty());
  CHECK(r.success);
  CHECK(r.collisions == 0);
  for (std::size_t t = 1; t < r.telemetry.size(); ++t) {
    CHECK((stack(r.telemetry[t].r) - stack(r.telemetry[t - 1].r)).norm() <= 4.0 + 1e-9);
  }
}

TEST_CASE("pure deformation control") {
  const FeatureDef def = FeatureDef::point_angle();
  const FeedbackVector s{{100, 100}, {200, 100}, {100, 200}};
  const Eigen::VectorXd y = feature_eval(def, s);
  Eigen::MatrixXd j_d = Eigen::MatrixXd::Zero(6, 4);
  j_d.block(2, 0, 2, 2) = Eigen::Matrix2d::Identity();
  j_d.block(4, 2, 2, 2) = Eigen::Matrix2d::Identity();
  j_d.block(0, 0, 2, 2) = 0.5 * Eigen::Matrix2d::Identity();
  j_d.block(0, 2, 2, 2) = 0.5 * Eigen::Matrix2d::Identity();
  CHECK(pure_deformation_control(def, s, y, j_d, 0.5, 4.0).isZero());

  Rng rng(7);
  const Eigen::MatrixXd a = random_matrix(rng, 2, 2) + 3 * Eigen::MatrixXd::Identity(2, 2);
  AffinePlant plant(a, Eigen::Vector2d(50, 50), {{10, 10}});
  Task task;
  task.feature = FeatureDef::single_point();
  task.s0 = plant.feedback();
  task.y_d = Eigen::Vector2d(140, 90);
  task.s_d = {Point(140, 90)};
  const RunResult r = run_pure(plant, task, Environment({640, 480}, {}), ControlConfig{});
  CHECK(r.success);
  CHECK(r.final_point_error < 5.0);
}
