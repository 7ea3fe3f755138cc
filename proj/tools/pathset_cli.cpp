#include <glob.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include "CLI11.hpp"
#include "dom/error.hpp"
#include "dom/report.hpp"
#include "dom/scenario.hpp"

using namespace dom;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 2;
constexpr int kInput = 3;

int log_level() {
  const char* env = std::getenv("PATHSET_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

void log(int level, const std::string& msg) {
  if (level <= log_level()) std::cerr << msg << "\n";
}

const char* kPathColors[] = {"#2e8b57", "#1f5fbf", "#1f8fbf", "#5f1fbf", "#bf1f8f", "#8fbf1f", "#bf8f1f", "#1fbf8f"};

std::vector<std::string> expand(const std::vector<std::string>& patterns) {
  std::vector<std::string> files;
  for (const std::string& pat : patterns) {
    glob_t g{};
    if (::glob(pat.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
  }
  return files;
}

fs::path out_dir(const std::string& out) {
  const fs::path dir(out.empty() ? "." : out);
  fs::create_directories(dir);
  return dir;
}

void draw_paths(Svg& svg, const PathSet& set) {
  for (std::size_t i = 0; i < set.paths.size(); ++i) {
    const bool pivot = static_cast<int>(i) == set.pivot_index;
    svg.polyline(set.paths[i].nodes(), pivot ? "#2e8b57" : "#1f5fbf", pivot ? 2.5 : 1.5);
  }
  for (const RepositionMove& m : set.moves) svg.line(m.from, m.to, "#d62728", 1.5);
}

int cmd_plan(const Scenario& sc, std::uint64_t seed, const std::string& cost, const std::string& out) {
  CostMode mode = sc.pathset.planner.cost_mode;
  if (cost == "length") mode = CostMode::Length;
  if (cost == "composite") mode = CostMode::Composite;
  const PlanOutcome plan = run_plan(sc, mode, seed);
  const fs::path dir = out_dir(out);
  Svg svg(sc.env.workspace());
  svg.environment(sc.env, true);
  svg.polyline(plan.path.nodes(), mode == CostMode::Composite ? "#2e8b57" : "#d62728", 2.5);
  svg.circle(plan.path.front(), 4, "black");
  svg.circle(plan.path.back(), 4, "black");
  svg.save((dir / "plan.svg").string());
  std::ofstream widths(dir / "width_profile.csv");
  write_width_csv(widths, plan.path, sc.env, 200);
  std::cout << "cost_mode " << (mode == CostMode::Composite ? "composite" : "length") << "\n"
            << "length " << format_fixed(plan.length, 3) << "\n"
            << "min_passage_width " << format_fixed(plan.min_passage_width, 3) << "\n"
            << "cost " << format_fixed(plan.cost, 6) << "\n";
  return kOk;
}

int cmd_transfer(const Scenario& sc, std::uint64_t seed, const std::string& out) {
  const TransferOutcome t = run_transfer(sc, seed);
  const fs::path dir = out_dir(out);
  Svg svg(sc.env.workspace());
  svg.environment(sc.env, true);
  draw_paths(svg, t.set);
  for (const Point& p : t.prepared.s0) svg.circle(p, 3, "black");
  for (const Point& p : t.prepared.s_d) svg.circle(p, 3, "#d62728");
  svg.save((dir / "transfer.svg").string());
  std::cout << "branch " << (t.set.certificate.branch == Branch::Basic ? "basic" : "general") << "\n"
            << "assumptions_hold " << t.set.assumptions.holds() << "\n"
            << "delta_p " << format_fixed(t.delta_p, 3) << "\n"
            << "paths " << t.set.paths.size() << "\n"
            << "strong_homotopic_like " << (t.set.certificate.strong_homotopic_like ? "true" : "false") << "\n";
  return kOk;
}

int cmd_track(const Scenario& sc, std::uint64_t seed, const std::string& controller, const std::string& out) {
  const ControllerKind kind = controller == "pure" ? ControllerKind::Pure : ControllerKind::PathSet;
  const TrackOutcome t = run_track(sc, kind, seed);
  const fs::path dir = out_dir(out);
  {
    std::ofstream csv(dir / "telemetry.csv");
    write_telemetry_csv(csv, t.result);
  }
  Svg svg(sc.env.workspace());
  svg.environment(sc.env, false);
  if (kind == ControllerKind::PathSet) draw_paths(svg, t.transfer.set);
  const std::size_t k = t.transfer.prepared.s0.size();
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<Point> trace;
    for (const Telemetry& tel : t.result.telemetry) trace.push_back(tel.s[i]);
    if (trace.size() >= 2) svg.polyline(trace, kPathColors[i % 8], 1.0, "3,2");
  }
  if (t.final_body) {
    for (const Spring& s : t.final_body->springs) {
      if (s.kind == SpringKind::Stretch) {
        svg.line(t.final_body->nodes[static_cast<std::size_t>(s.i)], t.final_body->nodes[static_cast<std::size_t>(s.j)],
                 "#ff7f0e", 2.0);
      }
    }
  }
  for (const Point& p : t.transfer.prepared.s_d) svg.circle(p, 3, "#d62728");
  svg.save((dir / "trajectory.svg").string());
  const nlohmann::json rep = run_report(sc, t, "telemetry.csv");
  {
    std::ofstream js(dir / "report.json");
    js << rep.dump(2) << "\n";
  }
  std::cout << "success " << (t.result.success ? "true" : "false") << "\n"
            << "steps " << t.result.steps << "\n"
            << "final_point_error " << format_fixed(t.result.final_point_error, 3) << "\n";
  if (sc.feature.kind == FeatureKind::PointAngle) {
    std::cout << "final_angle_error_deg " << format_fixed(t.result.final_angle_error * 180 / M_PI, 3) << "\n"
              << "min_angle_deg " << format_fixed(t.result.min_angle * 180 / M_PI, 3) << "\n";
  }
  std::cout << "modes";
  for (Mode m : t.result.mode_sequence) std::cout << ' ' << to_string(m);
  std::cout << "\n";
  if (!t.result.success) {
    log(1, "StepBudgetExhausted: no success within " + std::to_string(sc.control.budget) + " steps");
    return kDomain;
  }
  return kOk;
}

struct BenchRow {
  std::string name;
  std::string kind;
  int runs = 0;
  int completed = 0;
  int succeeded = 0;
  double error_sum = 0.0;
  int error_count = 0;
  double min_clearance = std::numeric_limits<double>::infinity();
};

int cmd_bench(const std::vector<std::string>& patterns, int seeds) {
  const std::vector<std::string> files = expand(patterns);
  if (files.empty()) {
    std::cerr << "bench: no scenario matches\n";
    return kInput;
  }
  std::vector<BenchRow> rows;
  int completed = 0;
  for (const std::string& file : files) {
    BenchRow row;
    row.name = fs::path(file).stem().string();
    Scenario sc;
    try {
      sc = load_scenario(file);
    } catch (const Error& e) {
      log(1, file + ": " + e.what());
      row.kind = "invalid";
      rows.push_back(row);
      continue;
    }
    row.kind = sc.kind == ScenarioKind::Plan ? "plan" : sc.kind == ScenarioKind::Transfer ? "transfer" : "track";
    for (int i = 0; i < seeds; ++i) {
      const std::uint64_t seed = sc.seed + static_cast<std::uint64_t>(i);
      ++row.runs;
      try {
        bool ok = false;
        if (sc.kind == ScenarioKind::Plan) {
          const PlanOutcome p = run_plan(sc, CostMode::Composite, seed);
          ok = p.min_passage_width >= sc.expect_min_passage;
          row.min_clearance = std::min(row.min_clearance, p.min_passage_width);
        } else if (sc.kind == ScenarioKind::Transfer) {
          ok = run_transfer(sc, seed).set.certificate.strong_homotopic_like;
        } else {
          const TrackOutcome t = run_track(sc, ControllerKind::PathSet, seed);
          ok = t.result.success;
          row.error_sum += t.result.final_point_error;
          ++row.error_count;
          row.min_clearance = std::min(row.min_clearance, t.result.min_do_distance);
        }
        ++row.completed;
        ++completed;
        row.succeeded += ok;
        log(2, row.name + " seed " + std::to_string(seed) + (ok ? " ok" : " failed"));
      } catch (const Error& e) {
        log(1, row.name + " seed " + std::to_string(seed) + ": " + e.what());
      }
    }
    rows.push_back(row);
  }
  std::cout << "scenario,kind,runs,completed,success,mean_final_error,min_clearance\n";
  for (const BenchRow& r : rows) {
    std::cout << r.name << ',' << r.kind << ',' << r.runs << ',' << r.completed << ',' << r.succeeded << '/' << r.runs
              << ',' << (r.error_count ? format_fixed(r.error_sum / r.error_count, 3) : "-") << ','
              << format_fixed(r.min_clearance, 3) << "\n";
  }
  return completed > 0 ? kOk : kDomain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-set planning and tracking for deformable object manipulation"};
  app.require_subcommand(1);

  std::string scenario_file, out, cost, controller = "pathset";
  std::int64_t seed = -1;
  int seeds = 1;
  std::vector<std::string> patterns;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario_file, "Scenario JSON file")->required();
    sub->add_option("--seed", seed, "Seed override");
    sub->add_option("--out", out, "Output directory");
  };
  CLI::App* plan = app.add_subcommand("plan", "Plan the pivot path");
  add_common(plan);
  plan->add_option("--cost", cost, "Cost mode")->check(CLI::IsMember({"length", "composite"}));
  CLI::App* transfer = app.add_subcommand("transfer", "Generate the path set");
  add_common(transfer);
  CLI::App* track = app.add_subcommand("track", "Run the closed loop");
  add_common(track);
  track->add_option("--controller", controller, "Controller")->check(CLI::IsMember({"pathset", "pure"}));
  CLI::App* bench = app.add_subcommand("bench", "Run scenarios over seeds");
  bench->add_option("--scenario", patterns, "Scenario glob")->required();
  bench->add_option("--seeds", seeds, "Seeds per scenario")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (bench->parsed()) return cmd_bench(patterns, seeds);
    const Scenario sc = load_scenario(scenario_file);
    const std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : sc.seed;
    log(2, "scenario " + sc.name + " seed " + std::to_string(s));
    if (plan->parsed()) return cmd_plan(sc, s, cost, out);
    if (transfer->parsed()) return cmd_transfer(sc, s, out);
    return cmd_track(sc, s, controller, out);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::Schema ? kInput : kDomain;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kDomain;
  }
}
