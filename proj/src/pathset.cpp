#include "dom/pathset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dom {

double theta(const FeedbackVector& s, const Point& sp) {
  double out = 0.0;
  for (const Point& p : s) out = std::max(out, (p - sp).norm());
  return out;
}

double delta_p(const FeedbackVector& s0, const FeedbackVector& sd, int pivot) {
  const auto p = static_cast<std::size_t>(pivot);
  return std::max(theta(s0, s0[p]), theta(sd, sd[p]));
}

namespace {

// Cox-de Boor basis of degree 2 on a clamped uniform knot vector.
std::vector<double> clamped_knots(std::size_t n_ctrl) {
  const std::size_t spans = n_ctrl - 2;
  std::vector<double> knots{0.0, 0.0, 0.0};
  for (std::size_t i = 1; i < spans; ++i) knots.push_back(static_cast<double>(i) / spans);
  knots.insert(knots.end(), {1.0, 1.0, 1.0});
  return knots;
}

Point de_boor(const std::vector<Point>& ctrl, const std::vector<double>& knots, double u) {
  constexpr int p = 2;
  const std::size_t n = ctrl.size();
  std::size_t k = static_cast<std::size_t>(p);
  while (k + 1 < n && u >= knots[k + 1]) ++k;
  Point d[p + 1];
  for (int j = 0; j <= p; ++j) d[j] = ctrl[k - p + static_cast<std::size_t>(j)];
  for (int r = 1; r <= p; ++r) {
    for (int j = p; j >= r; --j) {
      const std::size_t i = k - p + static_cast<std::size_t>(j);
      const double denom = knots[i + p + 1 - r] - knots[i];
      const double alpha = denom > 0.0 ? (u - knots[i]) / denom : 0.0;
      d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
    }
  }
  return d[p];
}

}  // namespace

Path smooth(const Path& path, int samples) {
  if (path.size() < 3 || samples < 2) return path.size() < 3 ? path.resampled(static_cast<std::size_t>(std::max(samples, 2))) : path;
  const auto& ctrl = path.nodes();
  const std::vector<double> knots = clamped_knots(ctrl.size());
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) out.push_back(de_boor(ctrl, knots, static_cast<double>(k) / (samples - 1)));
  out.front() = ctrl.front();
  out.back() = ctrl.back();
  return Path(std::move(out));
}

Path smooth(const Path& path, int samples, const Environment& env, double delta) {
  Path out = smooth(path, samples);
  if (!path_free(out, env, delta)) out = path;
  out.passages = path_passage_list(out, env);
  return out;
}

bool straight_line_homotopy_feasible(const Path& a, const Path& b, const Environment& env, double resolution) {
  std::vector<double> breaks = a.params();
  breaks.insert(breaks.end(), b.params().begin(), b.params().end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::vector<double> taus{0.0};
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    const double t0 = breaks[i - 1];
    const double t1 = breaks[i];
    const double move = std::max((a.at(t1) - a.at(t0)).norm(), (b.at(t1) - b.at(t0)).norm());
    const int pieces = std::max(1, static_cast<int>(std::ceil(move / resolution)));
    for (int k = 1; k <= pieces; ++k) taus.push_back(t0 + (t1 - t0) * (static_cast<double>(k) / pieces));
  }

  std::vector<Point> pa, pb;
  pa.reserve(taus.size());
  pb.reserve(taus.size());
  double spread = 0.0;
  for (double t : taus) {
    pa.push_back(a.at(t));
    pb.push_back(b.at(t));
    spread = std::max(spread, (pb.back() - pa.back()).norm());
  }
  const int m = std::max(1, static_cast<int>(std::ceil(spread / resolution)));

  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!env.segment_free(pa[k], pb[k], 0.0)) return false;
  }
  for (int j = 0; j <= m; ++j) {
    const double x = static_cast<double>(j) / m;
    for (std::size_t k = 0; k + 1 < taus.size(); ++k) {
      const Point p = (1.0 - x) * pa[k] + x * pb[k];
      const Point q = (1.0 - x) * pa[k + 1] + x * pb[k + 1];
      if (!env.segment_free(p, q, 0.0)) return false;
    }
  }
  return true;
}

Path end_concatenated(const Path& a, const Path& b) {
  std::vector<Point> nodes{b.front()};
  nodes.insert(nodes.end(), a.nodes().begin(), a.nodes().end());
  nodes.push_back(b.back());
  return Path(std::move(nodes));
}

bool strong_homotopic_like(const std::vector<Path>& paths, const Environment& env, double resolution) {
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = i + 1; j < paths.size(); ++j) {
      if (!straight_line_homotopy_feasible(end_concatenated(paths[i], paths[j]), paths[j], env, resolution)) {
        return false;
      }
    }
  }
  return true;
}

std::vector<int> loop_word(const std::vector<Point>& loop, const Environment& env) {
  // One cut ray per obstacle, all sharing a generic direction so they never
  // meet; crossing letters of the loop read off its free-group class.
  const Point dir(std::cos(0.7137), std::sin(0.7137));
  std::vector<int> word;
  const auto& obs = env.obstacles();
  for (std::size_t s = 0; s + 1 < loop.size(); ++s) {
    const Point& a = loop[s];
    const Point& b = loop[s + 1];
    std::vector<std::pair<double, int>> hits;
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const Point c = obs[k].centroid();
      const bool sa = cross(dir, a - c) >= 0.0;
      const bool sb = cross(dir, b - c) >= 0.0;
      if (sa == sb) continue;
      const double fa = cross(dir, a - c);
      const double fb = cross(dir, b - c);
      const double t = fa / (fa - fb);
      const Point q = a + t * (b - a);
      if ((q - c).dot(dir) <= 0.0) continue;
      const int letter = static_cast<int>(k) + 1;
      hits.emplace_back(t, sa ? letter : -letter);
    }
    std::sort(hits.begin(), hits.end());
    for (const auto& h : hits) {
      if (!word.empty() && word.back() == -h.second) {
        word.pop_back();
      } else {
        word.push_back(h.second);
      }
    }
  }
  // Cyclic reduction: the loop's base point is arbitrary.
  std::size_t lo = 0, hi = word.size();
  while (hi - lo >= 2 && word[lo] == -word[hi - 1]) {
    ++lo;
    --hi;
  }
  return {word.begin() + static_cast<std::ptrdiff_t>(lo), word.begin() + static_cast<std::ptrdiff_t>(hi)};
}

bool homotopic_like(const Path& a, const Path& b, const Environment& env) {
  if (!env.segment_free(b.front(), a.front(), 0.0) || !env.segment_free(a.back(), b.back(), 0.0)) return false;
  std::vector<Point> loop{b.front()};
  loop.insert(loop.end(), a.nodes().begin(), a.nodes().end());
  loop.insert(loop.end(), b.nodes().rbegin(), b.nodes().rend());
  return loop_word(loop, env).empty();
}

PathSet basic_forward_transfer(const FeedbackVector& s0, const FeedbackVector& sd, int pivot, const Path& pivot_path,
                               const Environment& env) {
  PathSet set;
  set.pivot_index = pivot;
  set.certificate.branch = Branch::Basic;
  set.pivot_raw = pivot_path;
  const Point s0p = s0[static_cast<std::size_t>(pivot)];
  for (std::size_t i = 0; i < s0.size(); ++i) {
    if (static_cast<int>(i) == pivot) {
      set.paths.push_back(pivot_path);
      continue;
    }
    const Path moved = pivot_path.translated(s0[i] - s0p);
    const Point target = sd[i];
    const double len = (target - moved.back()).norm();
    const auto& nodes = moved.nodes();
    std::vector<Point> out{s0[i]};
    Point joint = moved.back();
    std::size_t seg = nodes.size() - 2;
    bool found = false;
    // First point in traversal order at distance len from the target.
    for (std::size_t k = 0; k + 1 < nodes.size() && !found; ++k) {
      const Point d = nodes[k + 1] - nodes[k];
      const Point f = nodes[k] - target;
      const double qa = d.squaredNorm();
      const double qb = 2.0 * f.dot(d);
      const double qc = f.squaredNorm() - len * len;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      for (double u : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)}) {
        if (u >= 0.0 && u <= 1.0) {
          joint = nodes[k] + u * d;
          seg = k;
          found = true;
          break;
        }
      }
    }
    for (std::size_t k = 1; k <= seg; ++k) out.push_back(nodes[k]);
    out.push_back(joint);
    if (!env.segment_free(joint, target, 0.0)) {
      throw Error(ErrorCode::ConcatenationInfeasible, "closing segment of path " + std::to_string(i) + " collides");
    }
    out.push_back(target);
    Path path(std::move(out));
    path.passages = path_passage_list(path, env);
    set.paths.push_back(std::move(path));
  }
  return set;
}

std::optional<double> line_crossing(const Path& path, const Passage& passage, double near_tau) {
  const Point n = perp(passage.b - passage.a);
  const auto& nodes = path.nodes();
  const auto& params = path.params();
  std::optional<double> best;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double fa = n.dot(nodes[k] - passage.a);
    const double fb = n.dot(nodes[k + 1] - passage.a);
    if ((fa > 0.0 && fb > 0.0) || (fa < 0.0 && fb < 0.0)) continue;
    const double u = fa == fb ? 0.0 : fa / (fa - fb);
    const double tau = params[k] + u * (params[k + 1] - params[k]);
    if (!best || std::abs(tau - near_tau) < std::abs(*best - near_tau)) best = tau;
  }
  return best;
}

Chord chord(const std::vector<Path>& paths, const Passage& passage, double near_tau) {
  Chord out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto tau = line_crossing(paths[i], passage, near_tau);
    if (!tau) throw Error(ErrorCode::MissingCrossing, "path " + std::to_string(i) + " never meets the passage line");
    out.points.push_back(paths[i].at(*tau));
  }
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    for (std::size_t j = i + 1; j < out.points.size(); ++j) {
      out.length = std::max(out.length, (out.points[i] - out.points[j]).norm());
    }
  }
  return out;
}

double passage_coordinate(const Passage& passage, const Point& p) {
  return (p - passage.a).dot(passage.direction());
}

namespace {

Point blend(const std::vector<Anchor>& anchors, double tau) {
  if (anchors.empty()) return Point::Zero();
  if (tau <= anchors.front().tau) return anchors.front().shift;
  if (tau >= anchors.back().tau) return anchors.back().shift;
  auto it = std::upper_bound(anchors.begin(), anchors.end(), tau,
                             [](double t, const Anchor& a) { return t < a.tau; });
  const Anchor& hi = *it;
  const Anchor& lo = *(it - 1);
  const double span = hi.tau - lo.tau;
  const double u = span > 0.0 ? (tau - lo.tau) / span : 1.0;
  return (1.0 - u) * lo.shift + u * hi.shift;
}

struct Remapped {
  std::vector<Point> nodes;
  std::vector<double> taus;  // parameter on the source path
};

Remapped remap_nodes(const Path& path, const std::vector<Anchor>& anchors) {
  std::vector<double> taus = path.params();
  for (const Anchor& a : anchors) taus.push_back(std::clamp(a.tau, 0.0, 1.0));
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  Remapped out;
  for (double t : taus) {
    out.nodes.push_back(path.at(t) + blend(anchors, t));
    out.taus.push_back(t);
  }
  return out;
}

void insert_anchor(std::vector<Anchor>& anchors, Anchor a) {
  auto it = std::lower_bound(anchors.begin(), anchors.end(), a.tau,
                             [](const Anchor& x, double t) { return x.tau < t; });
  if (it != anchors.end() && std::abs(it->tau - a.tau) < 1e-12) {
    it->shift = a.shift;
  } else {
    anchors.insert(it, a);
  }
}

// Penetration depth inside an obstacle, negative clearance outside.
double depth(const Point& p, const Environment& env) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Obstacle& o : env.obstacles()) {
    const Polygon& poly = o.polygon();
    if (point_in_convex(p, poly)) {
      double inner = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        inner = std::min(inner, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
      }
      best = std::max(best, inner);
    } else {
      best = std::max(best, -point_polygon_witness(p, poly).distance);
    }
  }
  return best;
}

// Remap `base` through `anchors`, adding anchors that pull colliding parts
// toward `guide` (same parameter domain) until the result is collision-free.
Path remap_collision_free(const Path& base, std::vector<Anchor> anchors, const Path& guide, const Environment& env,
                          double delta_lo, int max_extra) {
  for (int extra = 0;; ++extra) {
    const Remapped r = remap_nodes(base, anchors);
    std::size_t bad = r.nodes.size();
    for (std::size_t k = 0; k + 1 < r.nodes.size(); ++k) {
      if (!env.segment_free(r.nodes[k], r.nodes[k + 1], 0.0)) {
        bad = k;
        break;
      }
    }
    if (bad == r.nodes.size()) return Path(r.nodes);
    if (extra >= max_extra) throw Error(ErrorCode::TransferInfeasible, "remapped path still collides");

    double best_depth = -std::numeric_limits<double>::infinity();
    double best_tau = r.taus[bad];
    for (std::size_t k = bad; k + 1 < r.nodes.size(); ++k) {
      if (k > bad && env.segment_free(r.nodes[k], r.nodes[k + 1], 0.0)) break;
      const double len = (r.nodes[k + 1] - r.nodes[k]).norm();
      const int n = std::max(2, static_cast<int>(std::ceil(len)) + 1);
      for (int s = 0; s < n; ++s) {
        const double u = static_cast<double>(s) / (n - 1);
        const double dep = depth(r.nodes[k] + u * (r.nodes[k + 1] - r.nodes[k]), env);
        if (dep > best_depth) {
          best_depth = dep;
          best_tau = r.taus[k] + u * (r.taus[k + 1] - r.taus[k]);
        }
      }
    }
    const Point current = base.at(best_tau) + blend(anchors, best_tau);
    const Point pull = guide.at(best_tau);
    Point target = pull;
    for (double ratio = 0.5; ratio > 1e-3; ratio *= 0.5) {
      const Point cand = pull + ratio * (current - pull);
      if (env.clearance(cand) >= delta_lo && !env.in_collision(cand)) {
        target = cand;
        break;
      }
    }
    insert_anchor(anchors, {best_tau, target - base.at(best_tau)});
  }
}

}  // namespace

Path remap(const Path& path, const std::vector<Anchor>& anchors) { return Path(remap_nodes(path, anchors).nodes); }

Repositioned reposition_pivot(const Path& pivot_path, const FeedbackVector& s0, int pivot, const Environment& env,
                              double delta_lo) {
  const Point s0p = s0[static_cast<std::size_t>(pivot)];
  std::vector<Path> moved;
  for (const Point& s : s0) moved.push_back(pivot_path.translated(s - s0p));

  Repositioned out;
  out.anchors.push_back({0.0, Point::Zero()});
  for (const Crossing& c : pivot_path.passages) {
    const Passage& ps = c.passage;
    const Chord ch = chord(moved, ps, c.tau);
    const double w = ps.width;
    const double lo = delta_lo;
    const double hi = w - delta_lo;
    if (lo > hi) throw Error(ErrorCode::CenteringInfeasible, "passage narrower than twice the minimum clearance");
    const Point pivot_pt = ch.points[static_cast<std::size_t>(pivot)];
    const double tp = passage_coordinate(ps, pivot_pt);
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = -tmin;
    for (const Point& p : ch.points) {
      const double t = passage_coordinate(ps, p);
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
    }
    const double center = 0.5 * (tmin + tmax);
    double target;
    if (w < ch.length) {
      target = std::clamp(tp + (0.5 * w - center), lo, hi);
    } else if (tmin < lo || tmax > hi) {
      double shift = tmin < lo ? lo - tmin : hi - tmax;
      if (tmax - tmin > hi - lo) shift = 0.5 * w - center;
      target = std::clamp(tp + shift, lo, hi);
    } else {
      continue;
    }
    const Point moved_pt = ps.a + target * ps.direction();
    out.anchors.push_back({c.tau, moved_pt - pivot_pt});
    out.moves.push_back({pivot_pt, moved_pt});
  }
  out.anchors.push_back({1.0, Point::Zero()});
  std::stable_sort(out.anchors.begin(), out.anchors.end(),
                   [](const Anchor& a, const Anchor& b) { return a.tau < b.tau; });
  out.path = remap_collision_free(pivot_path, out.anchors, pivot_path, env, delta_lo, 8);
  out.path.passages = path_passage_list(out.path, env);
  return out;
}

double compression_ratio(double gamma1, double beta1, double gamma2, double beta2) {
  double r = 1.0;
  if (beta1 > 0.0) r = std::min(r, gamma1 / beta1);
  if (beta2 > 0.0) r = std::min(r, gamma2 / beta2);
  return std::max(r, 0.0);
}

std::vector<Path> deformable_transfer(const FeedbackVector& s0, const FeedbackVector& sd, int pivot,
                                      const Path& pivot_path, const Environment& env, const PathSetConfig& cfg) {
  const std::size_t k_pts = s0.size();
  const std::size_t p = static_cast<std::size_t>(pivot);
  std::vector<Path> base;
  std::vector<std::vector<Anchor>> anchors(k_pts, std::vector<Anchor>{{0.0, Point::Zero()}});
  for (const Point& s : s0) base.push_back(pivot_path.translated(s - s0[p]));

  for (const Crossing& c : pivot_path.passages) {
    const Passage& ps = c.passage;
    std::vector<double> taus(k_pts);
    std::vector<Point> pts(k_pts);
    for (std::size_t i = 0; i < k_pts; ++i) {
      const auto t = line_crossing(base[i], ps, c.tau);
      if (!t) throw Error(ErrorCode::MissingCrossing, "transferred path misses a passage line");
      taus[i] = *t;
      pts[i] = base[i].at(*t);
    }
    const Point pv = pts[p];
    bool needs = false;
    for (std::size_t i = 0; i < k_pts && !needs; ++i) {
      if (i == p) continue;
      needs = env.clearance(pts[i]) < cfg.delta_lo || env.in_collision(pts[i]) || !env.segment_free(pv, pts[i], 0.0);
    }
    if (!needs) continue;
    const Polygon& e1 = env.obstacle(ps.first).polygon();
    const Polygon& e2 = env.obstacle(ps.second).polygon();
    const double gamma1 = std::max(0.0, point_polygon_witness(pv, e1).distance - cfg.delta_lo);
    const double gamma2 = std::max(0.0, point_polygon_witness(pv, e2).distance - cfg.delta_lo);
    double beta1 = 0.0, beta2 = 0.0;
    for (std::size_t i = 0; i < k_pts; ++i) {
      const double d1 = point_polygon_witness(pts[i], e1).distance;
      const double d2 = point_polygon_witness(pts[i], e2).distance;
      const double reach = (pts[i] - pv).norm();
      if (d1 < d2) beta1 = std::max(beta1, reach);
      if (d2 < d1) beta2 = std::max(beta2, reach);
    }
    const double ratio = compression_ratio(gamma1, beta1, gamma2, beta2);
    for (std::size_t i = 0; i < k_pts; ++i) {
      if (i == p) continue;
      const Point moved = pv + ratio * (pts[i] - pv);
      insert_anchor(anchors[i], {taus[i], moved - pts[i]});
    }
  }

  std::vector<Path> out;
  for (std::size_t i = 0; i < k_pts; ++i) {
    insert_anchor(anchors[i], {1.0, sd[i] - base[i].back()});
    Path path = i == p ? pivot_path
                       : remap_collision_free(base[i], anchors[i], pivot_path, env, cfg.delta_lo, cfg.max_extra_anchors);
    std::vector<Point> nodes = path.nodes();
    nodes.front() = s0[i];
    nodes.back() = sd[i];
    Path pinned(std::move(nodes));
    pinned.passages = path_passage_list(pinned, env);
    out.push_back(std::move(pinned));
  }
  return out;
}

bool reference_feasible(const FeedbackVector& s0, const FeedbackVector& sd, int pivot, const Environment& env,
                        double delta_lo) {
  const Point v = sd[static_cast<std::size_t>(pivot)] - s0[static_cast<std::size_t>(pivot)];
  FeedbackVector ref;
  for (const Point& s : s0) ref.push_back(s + v);
  for (const Point& r : ref) {
    if (env.clearance(r) < delta_lo || env.in_collision(r)) return false;
  }
  for (std::size_t i = 0; i + 1 < ref.size(); ++i) {
    if (!env.segment_free(ref[i], ref[i + 1], 0.0)) return false;
  }
  return true;
}

PathSet generate_path_set(const FeedbackVector& s0, const FeedbackVector& sd, int pivot, const Environment& env,
                          const PathSetConfig& cfg) {
  if (s0.empty() || s0.size() != sd.size() || pivot < 0 || static_cast<std::size_t>(pivot) >= s0.size()) {
    throw Error(ErrorCode::InvalidGeometry, "feedback vectors and pivot are inconsistent");
  }
  const std::size_t p = static_cast<std::size_t>(pivot);
  TransferAssumptionReport report;
  report.delta_p = delta_p(s0, sd, pivot);

  PlannerConfig pc = cfg.planner;
  pc.cost_mode = CostMode::Length;
  pc.delta = report.delta_p;
  std::optional<Path> interior_path;
  try {
    Planner planner(env, pc);
    interior_path = planner.plan(s0[p], sd[p]);
  } catch (const Error& e) {
    const ErrorCode code = e.code();
    if (code != ErrorCode::NoPath && code != ErrorCode::InvalidStart && code != ErrorCode::InvalidGoal &&
        code != ErrorCode::RejectionLimit) {
      throw;
    }
  }
  report.pivot_path_found_in_interior = interior_path.has_value();
  report.s_d_ref_feasible = reference_feasible(s0, sd, pivot, env, cfg.delta_lo);

  PathSet set;
  if (report.holds()) {
    Path pivot_path = *interior_path;
    if (cfg.smooth_samples > 0) pivot_path = smooth(pivot_path, cfg.smooth_samples, env, report.delta_p);
    set = basic_forward_transfer(s0, sd, pivot, pivot_path, env);
    set.pivot_raw = *interior_path;
  } else {
    pc.cost_mode = CostMode::Composite;
    pc.delta = cfg.general_delta;
    Planner planner(env, pc);
    const Path raw = planner.plan(s0[p], sd[p]);
    Path pivot_path = raw;
    if (cfg.smooth_samples > 0) pivot_path = smooth(raw, cfg.smooth_samples, env, cfg.general_delta);
    const Repositioned rep = reposition_pivot(pivot_path, s0, pivot, env, cfg.delta_lo);
    set.paths = deformable_transfer(s0, sd, pivot, rep.path, env, cfg);
    set.pivot_index = pivot;
    set.certificate.branch = Branch::General;
    set.pivot_raw = pivot_path;
    set.moves = rep.moves;
  }
  set.assumptions = report;
  set.certificate.strong_homotopic_like = strong_homotopic_like(set.paths, env, cfg.homotopy_resolution);
  return set;
}

}  // namespace dom
