#include <doctest.h>

#include <cmath>

#include "dom/planner.hpp"
#include "fixtures.hpp"

using namespace dom;
using fixtures::box;

namespace {

bool crosses(const Path& p, int a, int b) {
  for (const Crossing& c : p.passages) {
    if (c.passage.first == a && c.passage.second == b) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("empty workspace plan is near straight") {
  const Environment env({640, 480}, {});
  PlannerConfig cfg;
  cfg.iterations = 1500;
  const Point s(50, 50), g(550, 400);
  Planner planner(env, cfg);
  const Path p = planner.plan(s, g);
  CHECK(p.front() == s);
  CHECK(p.back() == g);
  CHECK(p.length() <= (g - s).norm() + 2 * cfg.step);
  CHECK(p.passages.empty());
}

TEST_CASE("length-mode plans approach the straight line over seeds") {
  const Environment env({640, 480}, {});
  const Point s(40, 240), g(600, 240);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PlannerConfig cfg;
    cfg.seed = seed;
    Planner planner(env, cfg);
    CHECK(planner.plan(s, g).length() <= 1.05 * (g - s).norm());
  }
}

TEST_CASE("full-height wall gives NoPath") {
  const Environment env({640, 480}, {Obstacle(0, box(300, 0, 340, 480))});
  PlannerConfig cfg;
  cfg.iterations = 500;
  Planner planner(env, cfg);
  try {
    planner.plan({100, 240}, {500, 240});
    FAIL("expected NoPath");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoPath);
  }
}

TEST_CASE("invalid start and goal") {
  const Environment env({640, 480}, {Obstacle(0, box(300, 200, 340, 280))});
  Planner planner(env, PlannerConfig{});
  CHECK_THROWS_WITH_AS(planner.plan({320, 240}, {500, 240}), doctest::Contains("InvalidStart"), Error);
  CHECK_THROWS_WITH_AS(planner.plan({100, 240}, {2, 240}), doctest::Contains("InvalidGoal"), Error);
}

TEST_CASE("sample_free") {
  const Environment empty({640, 480}, {});
  Rng rng(1);
  PlannerConfig cfg;
  cfg.delta = 0;
  for (int i = 0; i < 100; ++i) CHECK(empty.workspace().contains(Planner(empty, cfg).sample_free(rng)));
  cfg.delta = 300;
  CHECK_THROWS_WITH_AS(Planner(empty, cfg).sample_free(rng), doctest::Contains("RejectionLimit"), Error);

  const Environment env = fixtures::fig8_env();
  cfg.delta = 70;
  Planner planner(env, cfg);
  for (int i = 0; i < 500; ++i) {
    const Point p = planner.sample_free(rng);
    CHECK(env.nearest_obstacle(p).distance >= 70.0);
  }
}

TEST_CASE("edge_passages") {
  const Environment env({640, 480}, {Obstacle(0, box(100, 0, 140, 200)), Obstacle(1, box(100, 210, 140, 480)),
                                     Obstacle(2, box(300, 0, 340, 100)), Obstacle(3, box(300, 130, 340, 480))});
  SUBCASE("one gap") {
    const auto ps = edge_passages({50, 205}, {145, 205}, env);
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].width == doctest::Approx(10.0));
  }
  SUBCASE("parallel outside the gap") { CHECK(edge_passages({50, 20}, {50, 400}, env).empty()); }
  SUBCASE("two gaps in order") {
    const auto cs = edge_crossings({70, 227.5}, {370, 92.5}, env);
    // Diagonal passages between the columns are crossed too; the two gaps
    // must still appear in travel order.
    int gap_a = -1, gap_b = -1;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (cs[i].passage->first == 0 && cs[i].passage->second == 1) gap_a = static_cast<int>(i);
      if (cs[i].passage->first == 2 && cs[i].passage->second == 3) gap_b = static_cast<int>(i);
    }
    REQUIRE(gap_a >= 0);
    REQUIRE(gap_b >= 0);
    CHECK(gap_a < gap_b);
    for (std::size_t i = 1; i < cs.size(); ++i) CHECK(cs[i - 1].t <= cs[i].t);
  }
}

TEST_CASE("update_node_cost examples") {
  const Environment env({640, 480}, {Obstacle(0, box(100, 0, 140, 200)), Obstacle(1, box(100, 250, 140, 480)),
                                     Obstacle(2, box(300, 0, 340, 200)), Obstacle(3, box(300, 204, 340, 480))});
  PlannerConfig cfg;
  cfg.cost_mode = CostMode::Composite;
  cfg.eps_hi = 640;
  Planner planner(env, cfg);
  PlannerNode root;
  root.pos = {20, 20};
  root.min_passage_width = planner.eps_hi();

  const PlannerNode free = planner.update_node_cost(root, {20, 120});
  CHECK(free.length_cost == doctest::Approx(100.0));
  CHECK(free.cost == doctest::Approx(100.0 / 640.0));

  PlannerNode start;
  start.pos = {70, 225};
  start.min_passage_width = planner.eps_hi();
  const PlannerNode through = planner.update_node_cost(start, {170, 225});
  CHECK(through.min_passage_width == doctest::Approx(50.0));
  CHECK(through.cost == doctest::Approx(2.0));

  PlannerConfig trunc = cfg;
  trunc.f_lo = 20;
  trunc.eps_lo = 0.1;
  Planner tp(env, trunc);
  start.pos = {250, 202};
  const PlannerNode narrow = tp.update_node_cost(start, {350, 202});
  CHECK(narrow.min_passage_width == doctest::Approx(0.1));
  CHECK(narrow.cost == doctest::Approx(100.0 / 0.1));
}

TEST_CASE("path_passage_list") {
  const Environment env({640, 480}, {Obstacle(0, box(100, 0, 140, 200)), Obstacle(1, box(100, 250, 140, 480))});
  const Path through({{20, 225}, {220, 225}});
  REQUIRE(path_passage_list(through, env).size() == 1);
  CHECK(path_passage_list(through, env)[0].tau == doctest::Approx(0.5));
  CHECK(path_passage_list(Path({{20, 20}, {60, 400}}), env).empty());
}

TEST_CASE("composite cost is monotone under concatenation") {
  const Environment env = fixtures::fig8_env();
  PlannerConfig cfg;
  cfg.cost_mode = CostMode::Composite;
  cfg.f_lo = 10;
  Planner planner(env, cfg);
  Rng rng(5);
  auto random_path = [&](const Point& from) {
    std::vector<Point> pts{from};
    const int n = 1 + static_cast<int>(rng.next() % 4);
    for (int i = 0; i < n; ++i) pts.emplace_back(rng.uniform(0, 640), rng.uniform(0, 480));
    return Path(pts);
  };
  for (int i = 0; i < 2000; ++i) {
    const Path a = random_path({rng.uniform(0, 640), rng.uniform(0, 480)});
    const Path b = random_path(a.back());
    CHECK(planner.path_cost(concat(a, b)) >= planner.path_cost(a));
  }
}

TEST_CASE("planner invariants on the two-column layout") {
  const Environment env = fixtures::fig8_env();
  PlannerConfig cfg;
  cfg.cost_mode = CostMode::Composite;
  cfg.f_lo = 10;
  cfg.seed = 3;
  Planner planner(env, cfg);
  bool increased = false;
  planner.set_rewire_observer([&](int, double before, double after) { increased |= after > before; });
  const Path p = planner.plan({60, 240}, {580, 240});
  CHECK_FALSE(increased);
  for (std::size_t i = 1; i < planner.tree().size(); ++i) {
    const PlannerNode& n = planner.tree()[i];
    const PlannerNode& par = planner.tree()[static_cast<std::size_t>(n.parent)];
    CHECK(env.segment_free(par.pos, n.pos, cfg.delta));
    CHECK(n.cost == doctest::Approx(planner.update_node_cost(par, n.pos).cost));
  }
  CHECK(crosses(p, 1, 2));
  CHECK(crosses(p, 4, 5));

  Planner again(env, cfg);
  const Path q = again.plan({60, 240}, {580, 240});
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(q.nodes()[i] == p.nodes()[i]);
}

TEST_CASE("length mode takes the narrow shortcut") {
  const Environment env = fixtures::fig8_env();
  PlannerConfig cfg;
  cfg.seed = 3;
  Planner planner(env, cfg);
  const Path p = planner.plan({60, 240}, {580, 240});
  CHECK(crosses(p, 0, 1));
  CHECK(crosses(p, 3, 4));
}
