#include "dom/regulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dom/error.hpp"
#include "dom/pathset.hpp"

namespace dom {

namespace {

double wall_hit(const Workspace& ws, const Point& p, const Point& d) {
  double t = std::numeric_limits<double>::infinity();
  if (d.x() > 0) t = std::min(t, (ws.width - p.x()) / d.x());
  if (d.x() < 0) t = std::min(t, -p.x() / d.x());
  if (d.y() > 0) t = std::min(t, (ws.height - p.y()) / d.y());
  if (d.y() < 0) t = std::min(t, -p.y() / d.y());
  return std::max(t, 0.0);
}

double free_run(const Environment& env, const Point& p, const Point& d) {
  double t = wall_hit(env.workspace(), p, d);
  for (const Obstacle& o : env.obstacles()) {
    if (const auto hit = ray_polygon_hit(p, d, o.polygon())) t = std::min(t, *hit);
  }
  return t;
}

}  // namespace

Point path_tangent(const Path& path, double tau) {
  const auto& nodes = path.nodes();
  const auto& params = path.params();
  const std::size_t i = path.segment_at(tau);
  Point t;
  if (std::abs(params[i] - tau) <= 1e-12 && i > 0) {
    t = nodes[i + 1] - nodes[i - 1];
  } else if (std::abs(params[i + 1] - tau) <= 1e-12 && i + 2 < nodes.size()) {
    t = nodes[i + 2] - nodes[i];
  } else {
    t = nodes[i + 1] - nodes[i];
  }
  if (t.norm() <= 1e-12) throw Error(ErrorCode::DegenerateTangent, "tangent vanishes at tau=" + std::to_string(tau));
  return t.normalized();
}

double local_path_width(const Path& path, double tau, const Environment& env) {
  const Point p = path.at(tau);
  if (env.in_collision(p) || !env.workspace().contains(p)) return 0.0;
  const Point n = perp(path_tangent(path, tau));
  return free_run(env, p, n) + free_run(env, p, -n);
}

std::vector<WidthSample> width_profile(const Path& path, const Environment& env, int samples) {
  std::vector<WidthSample> out;
  for (int k = 0; k < samples; ++k) {
    const double t = samples > 1 ? static_cast<double>(k) / (samples - 1) : 0.0;
    out.push_back({t, local_path_width(path, t, env)});
  }
  return out;
}

RiskySegments risky_segments(const Path& pivot_path, const std::vector<double>& chords, double neighborhood) {
  RiskySegments raw;
  for (std::size_t i = 0; i < pivot_path.passages.size() && i < chords.size(); ++i) {
    const Crossing& c = pivot_path.passages[i];
    if (c.passage.width <= chords[i]) {
      raw.push_back({std::max(0.0, c.tau - neighborhood), std::min(1.0, c.tau + neighborhood)});
    }
  }
  std::sort(raw.begin(), raw.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  RiskySegments merged;
  for (const Interval& r : raw) {
    if (!merged.empty() && r.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, r.hi);
    } else {
      merged.push_back(r);
    }
  }
  return merged;
}

std::vector<double> crossing_chords(const Path& pivot_path, const std::vector<Path>& paths, double delta_p) {
  std::vector<double> out;
  for (const Crossing& c : pivot_path.passages) {
    double len = 2.0 * delta_p;
    try {
      len = std::max(len, chord(paths, c.passage, c.tau).length);
    } catch (const Error&) {
    }
    out.push_back(len);
  }
  return out;
}

ActivationVector activate(const Point& pivot_now, const Path& pivot_path, const RiskySegments& risky, Phase phase) {
  ActivationVector a;
  if (phase == Phase::Target) return a;
  const double t = pivot_path.project(pivot_now);
  a.a1 = std::none_of(risky.begin(), risky.end(), [t](const Interval& r) { return r.contains(t); });
  a.a3 = false;
  return a;
}

}  // namespace dom
