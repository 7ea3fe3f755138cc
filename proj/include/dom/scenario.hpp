#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "dom/control.hpp"

namespace dom {

enum class ScenarioKind { Plan, Transfer, Track };

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::Track;
  std::uint64_t seed = 0;
  Environment env;
  std::optional<DeformableBody> body;
  FeedbackVector start;  // S0 when there is no body
  FeedbackVector goal;   // explicit S_d; empty means determine_target
  FeatureDef feature;
  std::optional<Eigen::VectorXd> y_d;  // angles in radians
  ShapeConstraintDef shape;
  double shape_ratio = 0.0;
  std::optional<int> pivot;
  PathSetConfig pathset;
  ControlConfig control;
  SimConfig sim;
  TargetConfig target;
  double expect_min_passage = 0.0;  // plan scenarios: width the composite path must keep
};

/// Throws Error(Schema) on malformed documents.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& file);

struct Prepared {
  FeedbackVector s0;
  FeedbackVector s_d;
  Eigen::VectorXd y_d;
  int pivot = 0;
};
/// Initial feedback, targets and pivot for a scenario under `seed`.
Prepared prepare(const Scenario& sc, std::uint64_t seed);

struct PlanOutcome {
  Path path;
  double length = 0.0;
  double min_passage_width = 0.0;  // infinity when no passage is crossed
  double cost = 0.0;
};
PlanOutcome run_plan(const Scenario& sc, CostMode mode, std::uint64_t seed);

struct TransferOutcome {
  Prepared prepared;
  PathSet set;
  double delta_p = 0.0;
  RiskySegments risky;
};
TransferOutcome run_transfer(const Scenario& sc, std::uint64_t seed);

enum class ControllerKind { PathSet, Pure };

struct TrackOutcome {
  TransferOutcome transfer;
  RunResult result;
  std::optional<DeformableBody> final_body;
  double wall_time = 0.0;  // seconds
};
TrackOutcome run_track(const Scenario& sc, ControllerKind controller, std::uint64_t seed);

}  // namespace dom
