#include "dom/scenario.hpp"

#include <fstream>
#include <limits>
#include <set>

#include "dom/error.hpp"

namespace dom {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& what) { throw Error(ErrorCode::Schema, what); }

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) schema_error(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) schema_error("unknown key '" + key + "' in " + where);
  }
}

Point point(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) schema_error("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Point> points(const json& j) {
  if (!j.is_array()) schema_error("expected a list of points");
  std::vector<Point> out;
  for (const json& p : j) out.push_back(point(p));
  return out;
}

std::vector<int> ints(const json& j) {
  if (!j.is_array()) schema_error("expected a list of integers");
  std::vector<int> out;
  for (const json& v : j) {
    if (!v.is_number_integer()) schema_error("expected an integer");
    out.push_back(v.get<int>());
  }
  return out;
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    schema_error(std::string("bad value for '") + key + "'");
  }
}

void read_planner(const json& j, PlannerConfig& c) {
  check_keys(j, "planner",
             {"iterations", "step", "neighbor_radius", "delta", "goal_radius", "cost", "eps_hi", "eps_lo", "f_lo",
              "goal_bias"});
  read(j, "iterations", c.iterations);
  read(j, "step", c.step);
  read(j, "neighbor_radius", c.neighbor_radius);
  read(j, "delta", c.delta);
  read(j, "goal_radius", c.goal_radius);
  read(j, "eps_hi", c.eps_hi);
  read(j, "eps_lo", c.eps_lo);
  read(j, "f_lo", c.f_lo);
  read(j, "goal_bias", c.goal_bias);
  if (j.contains("cost")) {
    const std::string cost = j.at("cost").is_string() ? j.at("cost").get<std::string>() : "";
    if (cost == "length") c.cost_mode = CostMode::Length;
    else if (cost == "composite") c.cost_mode = CostMode::Composite;
    else schema_error("planner.cost must be 'length' or 'composite'");
  }
}

void read_control(const json& j, ControlConfig& c) {
  check_keys(j, "control",
             {"k_s", "xi", "v_max", "eta", "probe", "conflict_cos", "fix_radius", "success_px", "success_deg",
              "streak_limit", "budget", "escape_steps", "escape_reach", "neighborhood", "k_f", "k_e1", "k_e2", "k_c1",
              "k_c3", "threshold", "d0", "kappa_step", "min_advance"});
  read(j, "k_s", c.k_s);
  read(j, "xi", c.xi);
  read(j, "v_max", c.v_max);
  read(j, "eta", c.eta);
  read(j, "probe", c.probe);
  read(j, "conflict_cos", c.conflict_cos);
  read(j, "fix_radius", c.fix_radius);
  read(j, "success_px", c.success_px);
  read(j, "success_deg", c.success_deg);
  read(j, "streak_limit", c.streak_limit);
  read(j, "budget", c.budget);
  read(j, "escape_steps", c.escape_steps);
  read(j, "escape_reach", c.escape_reach);
  read(j, "neighborhood", c.neighborhood);
  read(j, "k_f", c.k_f);
  read(j, "k_e1", c.constraints.k_e1);
  read(j, "k_e2", c.constraints.k_e2);
  read(j, "k_c1", c.constraints.k_c1);
  read(j, "k_c3", c.constraints.k_c3);
  read(j, "threshold", c.constraints.threshold);
  read(j, "d0", c.escape.d0);
  read(j, "kappa_step", c.escape.kappa_step);
  read(j, "min_advance", c.escape.min_advance);
  if (c.v_max <= 0 || c.xi <= 0 || c.budget <= 0 || c.constraints.threshold <= 0) {
    schema_error("control gains, budget and threshold must be positive");
  }
}

DeformableBody read_body(const json& j) {
  check_keys(j, "body",
             {"type", "nodes", "grasps", "feedback", "bending", "hinges", "anchors", "origin", "nx", "ny", "spacing"});
  const std::string type = j.value("type", "chain");
  if (!j.contains("grasps") || !j.contains("feedback")) schema_error("body needs grasps and feedback");
  DeformableBody body;
  if (type == "chain") {
    if (!j.contains("nodes")) schema_error("chain body needs nodes");
    body = DeformableBody::chain(points(j.at("nodes")), ints(j.at("grasps")), ints(j.at("feedback")),
                                 j.value("bending", 0.0), j.contains("hinges") ? ints(j.at("hinges")) : std::vector<int>{});
  } else if (type == "grid") {
    if (!j.contains("origin") || !j.contains("nx") || !j.contains("ny") || !j.contains("spacing")) {
      schema_error("grid body needs origin, nx, ny and spacing");
    }
    body = DeformableBody::grid(point(j.at("origin")), j.at("nx").get<int>(), j.at("ny").get<int>(),
                                j.at("spacing").get<double>(), ints(j.at("grasps")), ints(j.at("feedback")));
  } else {
    schema_error("body.type must be 'chain' or 'grid'");
  }
  if (j.contains("anchors")) body.anchors = ints(j.at("anchors"));
  body.validate();
  return body;
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  check_keys(doc, "scenario",
             {"schema", "name", "kind", "seed", "workspace", "obstacles", "body", "start", "goal", "feature",
              "target", "shape", "pivot", "planner", "pathset", "control", "sim", "targeting", "expect"});
  if (doc.value("schema", 0) != 1) schema_error("schema must be 1");
  if (!doc.contains("seed") || !doc.at("seed").is_number_unsigned()) schema_error("seed is required");

  try {
    Scenario sc;
    sc.name = doc.value("name", "");
    sc.seed = doc.at("seed").get<std::uint64_t>();
    const std::string kind = doc.value("kind", "track");
    if (kind == "plan") sc.kind = ScenarioKind::Plan;
    else if (kind == "transfer") sc.kind = ScenarioKind::Transfer;
    else if (kind == "track") sc.kind = ScenarioKind::Track;
    else schema_error("kind must be plan, transfer or track");

    Workspace ws;
    if (doc.contains("workspace")) {
      const Point size = point(doc.at("workspace"));
      ws = {size.x(), size.y()};
    }
    std::vector<Obstacle> obstacles;
    if (doc.contains("obstacles")) {
      int id = 0;
      for (const json& poly : doc.at("obstacles")) obstacles.emplace_back(id++, points(poly));
    }
    sc.env = Environment(ws, std::move(obstacles));

    if (doc.contains("body")) sc.body = read_body(doc.at("body"));
    if (doc.contains("start")) sc.start = points(doc.at("start"));
    if (doc.contains("goal")) sc.goal = points(doc.at("goal"));
    if (!sc.body && sc.start.empty()) schema_error("scenario needs a body or start points");
    if (sc.kind == ScenarioKind::Track && !sc.body) schema_error("track scenarios need a body");
    const std::size_t k = sc.body ? sc.body->feedback_ids.size() : sc.start.size();

    if (doc.contains("feature")) {
      const json& f = doc.at("feature");
      check_keys(f, "feature", {"kind", "points"});
      const std::string fk = f.value("kind", "single_point");
      if (fk == "single_point") sc.feature = FeatureDef::single_point(f.value("points", static_cast<int>(k)));
      else if (fk == "point_angle") sc.feature = FeatureDef::point_angle();
      else schema_error("feature.kind must be single_point or point_angle");
    } else {
      sc.feature = FeatureDef::single_point(static_cast<int>(k));
    }
    if (static_cast<std::size_t>(sc.feature.points) != k) schema_error("feature point count does not match feedback");
    if (!sc.goal.empty() && sc.goal.size() != k) schema_error("goal point count does not match feedback");

    if (doc.contains("target")) {
      const json& t = doc.at("target");
      check_keys(t, "target", {"point", "angle_deg"});
      if (!t.contains("point")) schema_error("target needs a point");
      const Point p = point(t.at("point"));
      if (sc.feature.kind == FeatureKind::PointAngle) {
        if (!t.contains("angle_deg")) schema_error("point_angle target needs angle_deg");
        sc.y_d = Eigen::Vector3d(p.x(), p.y(), t.at("angle_deg").get<double>() * M_PI / 180.0);
      } else {
        sc.y_d = Eigen::VectorXd(p);
      }
    }
    if (sc.goal.empty() && !sc.y_d) schema_error("scenario needs a goal or a target");

    if (doc.contains("shape")) {
      check_keys(doc.at("shape"), "shape", {"side_ratio"});
      sc.shape_ratio = doc.at("shape").value("side_ratio", 0.0);
      if (sc.shape_ratio > 0) sc.shape = side_length_bound(sc.shape_ratio);
    }
    if (doc.contains("pivot")) {
      sc.pivot = doc.at("pivot").get<int>();
      if (*sc.pivot < 0 || static_cast<std::size_t>(*sc.pivot) >= k) schema_error("pivot out of range");
    }
    if (doc.contains("planner")) read_planner(doc.at("planner"), sc.pathset.planner);
    if (doc.contains("pathset")) {
      const json& p = doc.at("pathset");
      check_keys(p, "pathset", {"general_delta", "delta_lo", "homotopy_resolution", "smooth_samples", "max_extra_anchors"});
      read(p, "general_delta", sc.pathset.general_delta);
      read(p, "delta_lo", sc.pathset.delta_lo);
      read(p, "homotopy_resolution", sc.pathset.homotopy_resolution);
      read(p, "smooth_samples", sc.pathset.smooth_samples);
      read(p, "max_extra_anchors", sc.pathset.max_extra_anchors);
    }
    if (doc.contains("control")) read_control(doc.at("control"), sc.control);
    if (doc.contains("sim")) {
      const json& s = doc.at("sim");
      check_keys(s, "sim", {"iterations", "damping", "stiffness_scale"});
      read(s, "iterations", sc.sim.iterations);
      read(s, "damping", sc.sim.damping);
      read(s, "stiffness_scale", sc.sim.stiffness_scale);
    }
    if (doc.contains("targeting")) {
      const json& t = doc.at("targeting");
      check_keys(t, "targeting", {"lambda", "starts", "min_step"});
      read(t, "lambda", sc.target.lambda);
      read(t, "starts", sc.target.starts);
      read(t, "min_step", sc.target.min_step);
    }
    if (doc.contains("expect")) {
      check_keys(doc.at("expect"), "expect", {"min_passage_width"});
      sc.expect_min_passage = doc.at("expect").value("min_passage_width", 0.0);
    }
    return sc;
  } catch (const json::exception& e) {
    schema_error(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Schema) throw;
    schema_error(e.what());
  }
}

Scenario load_scenario(const std::string& file) {
  std::ifstream in(file);
  if (!in) schema_error("cannot open " + file);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    schema_error(file + ": " + e.what());
  }
  return parse_scenario(doc);
}

Prepared prepare(const Scenario& sc, std::uint64_t seed) {
  Prepared out;
  out.s0 = sc.body ? read_feedback(*sc.body) : sc.start;
  if (!sc.goal.empty()) {
    out.s_d = sc.goal;
    out.y_d = sc.y_d ? *sc.y_d : feature_eval(sc.feature, sc.goal);
  } else {
    TargetConfig tc = sc.target;
    tc.seed = seed;
    out.y_d = *sc.y_d;
    out.s_d = determine_target(out.s0, out.y_d, sc.env, sc.feature, sc.shape, tc);
  }
  out.pivot = sc.pivot ? *sc.pivot : select_pivot(sc.feature, out.s0);
  return out;
}

PlanOutcome run_plan(const Scenario& sc, CostMode mode, std::uint64_t seed) {
  const Prepared prep = prepare(sc, seed);
  PlannerConfig pc = sc.pathset.planner;
  pc.cost_mode = mode;
  pc.seed = seed;
  Planner planner(sc.env, pc);
  const auto p = static_cast<std::size_t>(prep.pivot);
  PlanOutcome out;
  out.path = planner.plan(prep.s0[p], prep.s_d[p]);
  out.length = out.path.length();
  out.min_passage_width = std::numeric_limits<double>::infinity();
  for (const Crossing& c : out.path.passages) out.min_passage_width = std::min(out.min_passage_width, c.passage.width);
  out.cost = planner.path_cost(out.path);
  return out;
}

TransferOutcome run_transfer(const Scenario& sc, std::uint64_t seed) {
  TransferOutcome out;
  out.prepared = prepare(sc, seed);
  PathSetConfig cfg = sc.pathset;
  cfg.planner.seed = seed;
  const Prepared& p = out.prepared;
  out.set = generate_path_set(p.s0, p.s_d, p.pivot, sc.env, cfg);
  out.delta_p = delta_p(p.s0, p.s_d, p.pivot);
  const Path& pivot_path = out.set.paths[static_cast<std::size_t>(p.pivot)];
  out.risky = risky_segments(pivot_path, crossing_chords(pivot_path, out.set.paths, out.delta_p),
                             sc.control.neighborhood);
  return out;
}

TrackOutcome run_track(const Scenario& sc, ControllerKind controller, std::uint64_t seed) {
  if (!sc.body) schema_error("track needs a body");
  const auto begin = std::chrono::steady_clock::now();
  TrackOutcome out;
  out.transfer = run_transfer(sc, seed);
  SimConfig sim = sc.sim;
  sim.seed = seed;
  BodyPlant plant(*sc.body, sim);
  Task task;
  task.feature = sc.feature;
  task.y_d = out.transfer.prepared.y_d;
  task.s_d = out.transfer.prepared.s_d;
  task.s0 = out.transfer.prepared.s0;
  task.shape = sc.shape;
  ControlConfig cfg = sc.control;
  cfg.escape.planner.seed = seed;
  if (controller == ControllerKind::Pure) {
    out.result = run_pure(plant, task, sc.env, cfg);
  } else {
    Controller ctl(out.transfer.set, out.transfer.risky, task, sc.env, cfg);
    out.result = ctl.run(plant);
  }
  out.final_body = plant.body();
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return out;
}

}  // namespace dom
