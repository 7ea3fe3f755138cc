#include "dom/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dom/error.hpp"

namespace dom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_angle(double a) { return std::remainder(a, 2.0 * M_PI); }

std::size_t nearest_node(const std::vector<Point>& nodes, const Point& p, std::size_t from, std::size_t to) {
  std::size_t best = from;
  double best_d = kInf;
  for (std::size_t k = from; k < to; ++k) {
    const double d = (nodes[k] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

ConstraintCommands evaluate_constraints(const ConstraintInputs& in, const Environment& env,
                                        const Eigen::MatrixXd& j_d, const ShapeConstraintDef& shape,
                                        const ConstraintConfig& cfg, bool throw_on_contact, bool* contact) {
  const Eigen::Index n = 2 * static_cast<Eigen::Index>(in.r.size());
  ConstraintCommands c;
  c.rdot_c1 = c.rdot_c2 = c.rdot_c3 = Eigen::VectorXd::Zero(n);
  c.g1 = c.g2 = c.g3 = Eigen::VectorXd::Zero(n);
  c.d_ee = kInf;
  c.d_do = in.do_distance.distance;

  for (std::size_t h = 0; h < in.r.size(); ++h) {
    const Witness w = env.nearest_obstacle(in.r[h]);
    c.d_ee = std::min(c.d_ee, w.distance);
    if (!std::isfinite(w.distance)) continue;
    if (w.distance <= 0.0) {
      if (throw_on_contact) throw Error(ErrorCode::ZeroDistance, "end effector touches an obstacle");
      if (contact) *contact = true;
      continue;
    }
    const Point dv = in.r[h] - w.on_b;
    const double d = w.distance;
    c.f2 += cfg.k_e2 / (2.0 * d * d);
    const Point push = cfg.k_e2 * dv / (d * d * d * d);
    c.rdot_c2.segment<2>(2 * static_cast<Eigen::Index>(h)) = push;
    c.g2.segment<2>(2 * static_cast<Eigen::Index>(h)) = -push;
  }

  if (std::isfinite(c.d_do)) {
    if (c.d_do <= 0.0) {
      if (throw_on_contact) throw Error(ErrorCode::ZeroDistance, "deformable object touches an obstacle");
      if (contact) *contact = true;
    } else {
      const Point away = in.do_distance.on_body - in.do_distance.on_obstacle;
      const Eigen::MatrixXd ji = j_d.middleRows(2 * in.witness_feedback, 2);
      c.f1 = cfg.k_e1 / (2.0 * c.d_do * c.d_do);
      c.rdot_c1 = cfg.k_c1 * ji.transpose() * away;
      c.g1 = -ji.transpose() * away * (cfg.k_e1 / std::pow(c.d_do, 4));
    }
  }

  if (shape.enabled()) {
    const Eigen::VectorXd h = shape.measure(in.s0, in.s);
    const Eigen::VectorXd dh = h - shape.center();
    c.f3 = 0.5 * dh.squaredNorm();
    const double step = 1e-4;
    Eigen::MatrixXd jh(h.size(), 2 * static_cast<Eigen::Index>(in.s.size()));
    for (std::size_t i = 0; i < in.s.size(); ++i) {
      for (int k = 0; k < 2; ++k) {
        FeedbackVector sp = in.s, sm = in.s;
        sp[i][k] += step;
        sm[i][k] -= step;
        jh.col(2 * static_cast<Eigen::Index>(i) + k) = (shape.measure(in.s0, sp) - shape.measure(in.s0, sm)) / (2 * step);
      }
    }
    c.g3 = (jh * j_d).transpose() * dh;
    c.rdot_c3 = -cfg.k_c3 * c.g3;
  }
  return c;
}

Eigen::MatrixXd probe_jacobian(Plant& plant, const Environment& env, double probe) {
  const int nh = plant.handle_count();
  const Eigen::Index n = 2 * nh;
  const Eigen::VectorXd s_start = stack(plant.feedback());
  Eigen::MatrixXd j(s_start.size(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::VectorXd before = stack(plant.feedback());
    Eigen::VectorXd dr = Eigen::VectorXd::Zero(n);
    dr[k] = probe;
    plant.command(unstack(dr), env);
    j.col(k) = (stack(plant.feedback()) - before) / probe;
  }
  return j;
}

void extend_interval(std::vector<StepInterval>& list, int t) {
  if (!list.empty() && list.back().end == t) {
    list.back().end = t + 1;
  } else {
    list.push_back({t, t + 1});
  }
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::TrackSet: return "track_set";
    case Mode::AdjustConstraints: return "adjust_constraints";
    case Mode::TrackEeEscape: return "track_ee_escape";
    case Mode::FinalFix: return "final_fix";
  }
  return "unknown";
}

bool broyden_update(Eigen::MatrixXd& j, const Eigen::VectorXd& dr, const Eigen::VectorXd& ds, double eta) {
  const double nn = dr.squaredNorm();
  if (std::sqrt(nn) <= 1e-9) return false;
  j += eta * (ds - j * dr) * dr.transpose() / nn;
  return true;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_tol) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cut = sv.size() > 0 ? rel_tol * sv[0] : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cut && sv[i] > 0.0) inv[i] = 1.0 / sv[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::VectorXd stack(const std::vector<Point>& pts) {
  Eigen::VectorXd v(2 * static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) v.segment<2>(2 * static_cast<Eigen::Index>(i)) = pts[i];
  return v;
}

std::vector<Point> unstack(const Eigen::VectorXd& v) {
  std::vector<Point> pts(static_cast<std::size_t>(v.size() / 2));
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = v.segment<2>(2 * static_cast<Eigen::Index>(i));
  return pts;
}

PathTracker::PathTracker(const std::vector<Path>& paths, int pivot, int min_nodes) : pivot_(pivot) {
  for (const Path& p : paths) {
    paths_.push_back(p.size() >= static_cast<std::size_t>(min_nodes) ? p : p.densified(p.length() / min_nodes));
  }
  index_.assign(paths_.size(), 0);
  tau_.assign(paths_.size(), 0.0);
}

PathTracker::Projection PathTracker::project(const FeedbackVector& s, bool monotone) {
  Projection out;
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    const auto& nodes = paths_[i].nodes();
    std::size_t k;
    if (first_ || window_reset_ || !monotone) {
      k = nearest_node(nodes, s[i], 0, nodes.size());
    } else {
      // Search from two nodes behind the last index up to 80 px ahead.
      const std::size_t from = index_[i] >= 2 ? index_[i] - 2 : 0;
      std::size_t to = index_[i] + 1;
      const double limit = paths_[i].params()[index_[i]] * paths_[i].length() + 80.0;
      while (to < nodes.size() && paths_[i].params()[to] * paths_[i].length() <= limit) ++to;
      k = nearest_node(nodes, s[i], from, to);
    }
    if (monotone && !first_ && !window_reset_) k = std::max(k, index_[i]);
    index_[i] = k;
    tau_[i] = paths_[i].params()[k];
    out.tau.push_back(tau_[i]);
    out.error.push_back(s[i] - nodes[k]);
  }
  first_ = false;
  window_reset_ = false;
  return out;
}

PathTracker::Projection project_onto_pathset(const FeedbackVector& s, const std::vector<Path>& paths) {
  PathTracker tracker(paths, 0);
  return tracker.project(s, false);
}

Eigen::VectorXd remove_conflicts(Eigen::VectorXd e, int pivot, double conflict_cos) {
  const Eigen::Vector2d ep = e.segment<2>(2 * pivot);
  const double np = ep.norm();
  if (np == 0.0) return e;
  const Eigen::Vector2d u = ep / np;
  for (Eigen::Index i = 0; i < e.size() / 2; ++i) {
    if (i == pivot) continue;
    const Eigen::Vector2d ei = e.segment<2>(2 * i);
    if (ei.dot(ep) < conflict_cos * ei.norm() * np) e.segment<2>(2 * i) = ei - ei.dot(u) * u;
  }
  return e;
}

Eigen::VectorXd tracking_error(const FeedbackVector& s, const std::vector<Path>& paths, int pivot, double tau_pivot,
                               double xi, double conflict_cos) {
  const double t = std::min(1.0, tau_pivot + xi);
  Eigen::VectorXd e(2 * static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) e.segment<2>(2 * static_cast<Eigen::Index>(i)) = s[i] - paths[i].at(t);
  return remove_conflicts(std::move(e), pivot, conflict_cos);
}

Eigen::VectorXd clamp_norm(const Eigen::VectorXd& v, double v_max) {
  const double n = v.norm();
  return n > v_max ? Eigen::VectorXd(v * (v_max / n)) : v;
}

Eigen::VectorXd tracking_command(const Eigen::VectorXd& e, const Eigen::MatrixXd& j, const Eigen::MatrixXd& k,
                                 double v_max) {
  return clamp_norm(-pseudo_inverse(j) * (k * e), v_max);
}

ConstraintCommands constraint_commands(const ConstraintInputs& in, const Environment& env, const Eigen::MatrixXd& j_d,
                                       const ShapeConstraintDef& shape, const ConstraintConfig& cfg) {
  return evaluate_constraints(in, env, j_d, shape, cfg, true, nullptr);
}

Eigen::MatrixXd null_projector(const Eigen::VectorXd& g) {
  const Eigen::Index n = g.size();
  const double nn = g.squaredNorm();
  if (nn == 0.0) return Eigen::MatrixXd::Identity(n, n);
  return Eigen::MatrixXd::Identity(n, n) - g * g.transpose() / nn;
}

Eigen::VectorXd constrained_command(const ConstraintCommands& c, const ActivationVector& a,
                                    const Eigen::VectorXd& task) {
  const Eigen::Index n = c.rdot_c2.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n);
  if (a.a2) {
    out += c.rdot_c2;
    proj = null_projector(c.g2);
  }
  if (a.a1) {
    out += proj * c.rdot_c1;
    proj = proj * null_projector(c.g1);
  }
  if (a.a3) {
    out += proj * c.rdot_c3;
    proj = proj * null_projector(c.g3);
  }
  if (task.size() == n) out += proj * task;
  return out;
}

Path plan_ee_escape(const Point& r_now, const Path& pivot_path, double tau_now, const RiskySegments& risky,
                    const Environment& env, const EscapeConfig& cfg) {
  const double len = pivot_path.length();
  const Point offset = r_now - pivot_path.at(tau_now);
  double tau_min = std::min(1.0, tau_now + cfg.min_advance / len);
  for (const Interval& w : risky) {
    if (w.hi > tau_now) {
      tau_min = std::max(tau_min, std::min(1.0, w.hi + 1e-9));
      break;
    }
  }
  PlannerConfig pc = cfg.planner;
  pc.cost_mode = CostMode::Length;
  pc.delta = cfg.d0;
  const double start_clear = env.clearance(r_now);
  if (start_clear < pc.delta) pc.delta = 0.5 * start_clear;
  if (pc.delta <= 0.0) throw Error(ErrorCode::EscapeInfeasible, "end effector has no clearance");

  int attempts = 0;
  for (double t = tau_min; t <= 1.0 + 1e-12 && attempts < 8; t += cfg.kappa_step) {
    const double tau = std::min(t, 1.0);
    const Point r_d = pivot_path.at(tau) + offset;
    if (!env.workspace().contains(r_d) || env.clearance(r_d) <= cfg.d0) continue;
    ++attempts;
    Path ee;
    try {
      pc.seed = cfg.planner.seed + static_cast<std::uint64_t>(attempts);
      ee = Planner(env, pc).plan(r_now, r_d);
    } catch (const Error&) {
      continue;
    }
    if (homotopic_like(pivot_path.sub(tau_now, tau), ee, env)) return ee;
  }
  throw Error(ErrorCode::EscapeInfeasible, "no clear escape target past the risky region");
}

Eigen::VectorXd pure_deformation_control(const FeatureDef& def, const FeedbackVector& s, const Eigen::VectorXd& y_d,
                                         const Eigen::MatrixXd& j_d, double k_f, double v_max) {
  Eigen::VectorXd e = feature_eval(def, s) - y_d;
  if (def.kind == FeatureKind::PointAngle) e[2] = wrap_angle(e[2]);
  const Eigen::MatrixXd j = feature_jacobian(def, s) * j_d;
  return clamp_norm(-pseudo_inverse(j) * (k_f * e), v_max);
}

std::pair<double, double> feature_errors(const FeatureDef& def, const FeedbackVector& s, const Eigen::VectorXd& y_d) {
  const Eigen::VectorXd y = feature_eval(def, s);
  if (def.kind == FeatureKind::Custom) return {(y - y_d).norm(), 0.0};
  const double pe = (y.head<2>() - y_d.head<2>()).norm();
  const double ae = def.kind == FeatureKind::PointAngle ? std::abs(wrap_angle(y[2] - y_d[2])) : 0.0;
  return {pe, ae};
}

Controller::Controller(const PathSet& set, const RiskySegments& risky, const Task& task, const Environment& env,
                       ControlConfig cfg)
    : paths_(set.paths), tracker_(set.paths, set.pivot_index), risky_(risky), task_(task), env_(&env),
      cfg_(std::move(cfg)) {
  result_.s_d = task.s_d;
  result_.mode_sequence.push_back(Mode::TrackSet);
}

void Controller::initialize(Plant& plant) { j_ = probe_jacobian(plant, *env_, cfg_.probe); }

void Controller::set_mode(Mode m) {
  if (m == mode_) return;
  mode_ = m;
  result_.mode_sequence.push_back(m);
}

bool Controller::violated(const ConstraintCommands& c, const ActivationVector& a) const {
  const double thr = cfg_.constraints.threshold;
  return (a.a1 && c.d_do < thr) || (a.a2 && c.d_ee < thr);
}

bool Controller::finished(const FeedbackVector& s, Telemetry& tel) const {
  const auto [pe, ae] = feature_errors(task_.feature, s, task_.y_d);
  tel.target_error = (s[static_cast<std::size_t>(tracker_.pivot())] - task_.s_d[static_cast<std::size_t>(tracker_.pivot())]).norm();
  return pe < cfg_.success_px && ae < cfg_.success_deg * M_PI / 180.0;
}

Eigen::VectorXd Controller::command_for(Plant& plant, const FeedbackVector& s, const std::vector<Point>& r,
                                        Telemetry& tel) {
  const int p = tracker_.pivot();
  const auto pi = static_cast<std::size_t>(p);
  const Path& pivot_path = paths_[pi];
  const PathTracker::Projection proj = tracker_.project(s, true);
  const double tau_p = proj.tau[pi];
  tel.tau_pivot = tau_p;

  ActivationVector a = activate(s[pi], pivot_path, risky_, Phase::Execution);
  if (mode_ == Mode::TrackEeEscape) a.a1 = false;

  ConstraintInputs in;
  in.s = s;
  in.s0 = task_.s0;
  in.r = r;
  in.do_distance = plant.distance(*env_);
  in.witness_feedback = plant.witness_feedback(in.do_distance);
  bool contact = false;
  ConstraintCommands c = evaluate_constraints(in, *env_, j_, task_.shape, cfg_.constraints, false, &contact);
  if (contact) ++result_.collisions;
  tel.d_do = c.d_do;
  tel.d_ee = c.d_ee;

  const Eigen::MatrixXd gain = cfg_.k_s * Eigen::MatrixXd::Identity(j_.rows(), j_.rows());
  const Eigen::MatrixXd j_pinv = pseudo_inverse(j_);

  if (mode_ != Mode::FinalFix && (s[pi] - task_.s_d[pi]).norm() < cfg_.fix_radius) {
    if (mode_ == Mode::TrackEeEscape) escape_path_.reset();
    set_mode(Mode::FinalFix);
  }

  auto escape_command = [&]() {
    const Point r0 = r.front();
    const Path& ee = *escape_path_;
    const double t = std::min(1.0, ee.project(r0) + 10.0 / ee.length());
    const Point v = ee.at(t) - r0;
    Eigen::VectorXd task(2 * static_cast<Eigen::Index>(r.size()));
    for (std::size_t h = 0; h < r.size(); ++h) task.segment<2>(2 * static_cast<Eigen::Index>(h)) = v;
    return task;
  };

  if (mode_ == Mode::TrackEeEscape) {
    const bool reached = (r.front() - escape_path_->back()).norm() < cfg_.escape_reach;
    if (reached || t_ - escape_started_ >= cfg_.escape_steps) {
      escape_path_.reset();
      tracker_.reset_window();
      streak_ = 0;
      set_mode(Mode::TrackSet);
    } else {
      tel.a = a;
      const Eigen::VectorXd task = escape_command();
      return c.d_ee < cfg_.constraints.threshold ? constrained_command(c, {false, true, false}, task) : task;
    }
  }

  Eigen::VectorXd e;
  if (mode_ == Mode::FinalFix) {
    e = remove_conflicts(stack(s) - stack(task_.s_d), p, cfg_.conflict_cos);
  } else {
    e = tracking_error(s, paths_, p, tau_p, cfg_.xi, cfg_.conflict_cos);
  }
  for (Eigen::Index i = 0; i < e.size() / 2; ++i) tel.error_norms.push_back(e.segment<2>(2 * i).norm());
  {
    const double t0 = std::min(1.0, tau_p + cfg_.xi);
    const double t1 = std::min(1.0, t0 + 1e-3);
    double dot = 0.0;
    if (t1 > t0) {
      for (std::size_t i = 0; i < paths_.size(); ++i) {
        dot += (s[i] - paths_[i].at(t0)).dot((paths_[i].at(t1) - paths_[i].at(t0)) / (t1 - t0));
      }
    }
    tel.diagnostic = dot;
  }
  const Eigen::VectorXd task = -j_pinv * (gain * e);
  tel.a = a;

  if (!violated(c, a)) {
    streak_ = 0;
    if (mode_ == Mode::AdjustConstraints) set_mode(Mode::TrackSet);
    return task;
  }
  if (mode_ == Mode::FinalFix) return constrained_command(c, a, task);

  ++streak_;
  set_mode(Mode::AdjustConstraints);
  if (streak_ > cfg_.streak_limit) {
    result_.stuck_events.push_back(t_);
    result_.stuck_streak_at_trigger = streak_;
    try {
      EscapeConfig ec = cfg_.escape;
      ec.planner.seed += static_cast<std::uint64_t>(t_);
      escape_path_ = plan_ee_escape(r.front(), pivot_path, tau_p, risky_, *env_, ec);
      escape_started_ = t_;
      set_mode(Mode::TrackEeEscape);
      tel.a.a1 = false;
      const Eigen::VectorXd ee = escape_command();
      return c.d_ee < cfg_.constraints.threshold ? constrained_command(c, {false, true, false}, ee) : ee;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::EscapeInfeasible) throw;
      result_.escape_failures.push_back(t_);
      cfg_.constraints.k_e1 *= 0.5;
      cfg_.constraints.k_e2 *= 0.5;
      cfg_.constraints.k_c1 *= 0.5;
      streak_ = 0;
    }
  }
  return constrained_command(c, a, task);
}

bool Controller::step(Plant& plant) {
  if (j_.size() == 0) initialize(plant);
  const FeedbackVector s = plant.feedback();
  const std::vector<Point> r = plant.handles();
  if (!result_.telemetry.empty()) {
    const Telemetry& prev = result_.telemetry.back();
    broyden_update(j_, stack(r) - stack(prev.r), stack(s) - stack(prev.s), cfg_.eta);
  }

  Telemetry tel;
  tel.t = t_;
  tel.s = s;
  tel.r = r;
  tel.feature = feature_eval(task_.feature, s);
  if (task_.shape.enabled()) tel.shape = task_.shape.measure(task_.s0, s);
  if (finished(s, tel)) {
    result_.success = true;
    return false;
  }
  if (t_ >= cfg_.budget) return false;

  const Eigen::VectorXd rdot = clamp_norm(command_for(plant, s, r, tel), cfg_.v_max);
  tel.mode = mode_;
  if (!tel.a.a1) extend_interval(result_.relaxed_c1, t_);
  if (task_.shape.enabled() && !task_.shape.satisfied(task_.s0, s)) extend_interval(result_.shape_violations, t_);
  result_.telemetry.push_back(tel);
  plant.command(unstack(rdot), *env_);
  ++t_;
  return true;
}

namespace {

void finalize(RunResult& res, const Task& task, const FeedbackVector& s, int steps) {
  res.steps = steps;
  const auto [pe, ae] = feature_errors(task.feature, s, task.y_d);
  res.final_point_error = pe;
  res.final_angle_error = ae;
  res.min_do_distance = kInf;
  res.min_angle = kInf;
  for (const Telemetry& t : res.telemetry) {
    res.min_do_distance = std::min(res.min_do_distance, t.d_do);
    if (task.feature.kind == FeatureKind::PointAngle) res.min_angle = std::min(res.min_angle, t.feature[2]);
  }
  if (task.feature.kind == FeatureKind::PointAngle) res.min_angle = std::min(res.min_angle, vertex_angle(s));
}

}  // namespace

RunResult Controller::run(Plant& plant) {
  while (step(plant)) {
  }
  finalize(result_, task_, plant.feedback(), t_);
  return result_;
}

RunResult run_pure(Plant& plant, const Task& task, const Environment& env, const ControlConfig& cfg) {
  RunResult res;
  res.s_d = task.s_d;
  res.mode_sequence.push_back(Mode::TrackSet);
  Eigen::MatrixXd j = probe_jacobian(plant, env, cfg.probe);
  int t = 0;
  for (; t <= cfg.budget; ++t) {
    const FeedbackVector s = plant.feedback();
    const std::vector<Point> r = plant.handles();
    if (!res.telemetry.empty()) {
      broyden_update(j, stack(r) - stack(res.telemetry.back().r), stack(s) - stack(res.telemetry.back().s), cfg.eta);
    }
    const auto [pe, ae] = feature_errors(task.feature, s, task.y_d);
    if (pe < cfg.success_px && ae < cfg.success_deg * M_PI / 180.0) {
      res.success = true;
      break;
    }
    if (t == cfg.budget) break;
    Telemetry tel;
    tel.t = t;
    tel.s = s;
    tel.r = r;
    tel.feature = feature_eval(task.feature, s);
    tel.target_error = pe;
    const DoDistance d = plant.distance(env);
    tel.d_do = d.distance;
    tel.d_ee = kInf;
    for (const Point& h : r) tel.d_ee = std::min(tel.d_ee, env.nearest_obstacle(h).distance);
    if (d.distance <= 0.0) ++res.collisions;
    tel.a = {false, false, false};
    if (task.shape.enabled()) tel.shape = task.shape.measure(task.s0, s);
    res.telemetry.push_back(tel);
    plant.command(unstack(pure_deformation_control(task.feature, s, task.y_d, j, cfg.k_f, cfg.v_max)), env);
  }
  finalize(res, task, plant.feedback(), t);
  return res;
}

}  // namespace dom
