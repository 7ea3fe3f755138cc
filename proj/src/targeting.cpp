#include "dom/targeting.hpp"

#include <cmath>
#include <limits>

#include "dom/error.hpp"
#include "dom/planner.hpp"

namespace dom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Point unit(double a) { return {std::cos(a), std::sin(a)}; }

double angle_of(const Point& v) { return std::atan2(v.y(), v.x()); }

Eigen::VectorXd flatten(const FeedbackVector& s) {
  Eigen::VectorXd v(2 * static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) v.segment<2>(2 * static_cast<Eigen::Index>(i)) = s[i];
  return v;
}

FeedbackVector unflatten(const Eigen::VectorXd& v) {
  FeedbackVector s(static_cast<std::size_t>(v.size() / 2));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = v.segment<2>(2 * static_cast<Eigen::Index>(i));
  return s;
}

void check_size(const FeatureDef& def, const FeedbackVector& s) {
  if (static_cast<int>(s.size()) != def.points) {
    throw Error(ErrorCode::InvalidGeometry, "feedback vector has " + std::to_string(s.size()) + " points, feature expects " +
                                                std::to_string(def.points));
  }
}

// Feasible-manifold chart: parameters -> feedback vector with F(S) = y_d.
struct Chart {
  std::function<FeedbackVector(const Eigen::VectorXd&)> map;
  Eigen::VectorXd reference;
  Eigen::VectorXd steps;
  std::function<Eigen::VectorXd(Rng&)> start;
};

Chart point_angle_chart(const FeedbackVector& s0, const FeedbackVector& ref, const Point& vertex, double alpha_d) {
  const Point u0 = s0[1] - s0[0];
  const Point w0 = s0[2] - s0[0];
  const double sigma = cross(u0, w0) >= 0.0 ? 1.0 : -1.0;
  const double alpha0 = vertex_angle(s0);
  const double bisector = angle_of(ref[1] - vertex) + sigma * alpha0 / 2;

  Chart c;
  c.map = [vertex, sigma, alpha_d](const Eigen::VectorXd& x) {
    return FeedbackVector{vertex, vertex + x[0] * unit(x[2]), vertex + x[1] * unit(x[2] + sigma * alpha_d)};
  };
  c.reference = Eigen::Vector3d(u0.norm(), w0.norm(), bisector - sigma * alpha_d / 2);
  c.steps = Eigen::Vector3d(0.1 * u0.norm(), 0.1 * w0.norm(), 0.5);
  const Eigen::VectorXd base = c.reference;
  c.start = [base](Rng& rng) {
    Eigen::VectorXd x = base;
    x[2] += rng.uniform(-M_PI, M_PI);
    return x;
  };
  return c;
}

Chart free_point_chart(const FeedbackVector& ref, const std::vector<int>& incomplete) {
  Chart c;
  c.map = [ref, incomplete](const Eigen::VectorXd& x) {
    FeedbackVector s = ref;
    for (std::size_t k = 0; k < incomplete.size(); ++k) {
      s[static_cast<std::size_t>(incomplete[k])] = x.segment<2>(2 * static_cast<Eigen::Index>(k));
    }
    return s;
  };
  c.reference.resize(2 * static_cast<Eigen::Index>(incomplete.size()));
  for (std::size_t k = 0; k < incomplete.size(); ++k) {
    c.reference.segment<2>(2 * static_cast<Eigen::Index>(k)) = ref[static_cast<std::size_t>(incomplete[k])];
  }
  c.steps = Eigen::VectorXd::Constant(c.reference.size(), 10.0);
  const Eigen::VectorXd base = c.reference;
  c.start = [base](Rng& rng) {
    Eigen::VectorXd x = base;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += rng.uniform(-20.0, 20.0);
    return x;
  };
  return c;
}

}  // namespace

FeatureDef FeatureDef::single_point(int points) {
  FeatureDef d;
  d.kind = FeatureKind::SinglePoint;
  d.points = points;
  return d;
}

FeatureDef FeatureDef::point_angle() {
  FeatureDef d;
  d.kind = FeatureKind::PointAngle;
  d.points = 3;
  return d;
}

int FeatureDef::m() const {
  switch (kind) {
    case FeatureKind::SinglePoint: return 2;
    case FeatureKind::PointAngle: return 3;
    case FeatureKind::Custom: return dimension;
  }
  return dimension;
}

bool ShapeConstraintDef::satisfied(const FeedbackVector& s0, const FeedbackVector& s, double tol) const {
  if (!enabled()) return true;
  const Eigen::VectorXd h = measure(s0, s);
  return ((h - lower).array() >= -tol).all() && ((upper - h).array() >= -tol).all();
}

Eigen::VectorXd side_length_change(const FeedbackVector& s0, const FeedbackVector& s) {
  Eigen::VectorXd h(2);
  for (int i = 0; i < 2; ++i) {
    const double l0 = (s0[static_cast<std::size_t>(i + 1)] - s0[0]).norm();
    const double l = (s[static_cast<std::size_t>(i + 1)] - s[0]).norm();
    h[i] = (l - l0) / l0;
  }
  return h;
}

ShapeConstraintDef side_length_bound(double ratio) {
  ShapeConstraintDef d;
  d.measure = side_length_change;
  d.lower = Eigen::Vector2d::Constant(-ratio);
  d.upper = Eigen::Vector2d::Constant(ratio);
  return d;
}

double vertex_angle(const FeedbackVector& s) {
  const Point u = s[1] - s[0];
  const Point w = s[2] - s[0];
  if (u.norm() == 0.0 || w.norm() == 0.0) throw Error(ErrorCode::DegenerateAngle, "zero-length angle side");
  return std::atan2(std::abs(cross(u, w)), u.dot(w));
}

Eigen::VectorXd feature_eval(const FeatureDef& def, const FeedbackVector& s) {
  check_size(def, s);
  switch (def.kind) {
    case FeatureKind::SinglePoint: return Eigen::Vector2d(s[0]);
    case FeatureKind::PointAngle: return Eigen::Vector3d(s[0].x(), s[0].y(), vertex_angle(s));
    case FeatureKind::Custom: return def.eval(s);
  }
  return {};
}

Eigen::MatrixXd feature_jacobian(const FeatureDef& def, const FeedbackVector& s) {
  check_size(def, s);
  const Eigen::Index n = 2 * static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(def.m(), n);
  switch (def.kind) {
    case FeatureKind::SinglePoint:
      j.block<2, 2>(0, 0).setIdentity();
      return j;
    case FeatureKind::PointAngle: {
      vertex_angle(s);
      const Point u = s[1] - s[0];
      const Point w = s[2] - s[0];
      const double sigma = cross(u, w) >= 0.0 ? 1.0 : -1.0;
      const Point du = -sigma * perp(u) / u.squaredNorm();
      const Point dw = sigma * perp(w) / w.squaredNorm();
      j.block<2, 2>(0, 0).setIdentity();
      j.block<1, 2>(2, 0) = -(du + dw).transpose();
      j.block<1, 2>(2, 2) = du.transpose();
      j.block<1, 2>(2, 4) = dw.transpose();
      return j;
    }
    case FeatureKind::Custom: {
      const double h = 1e-5;
      const Eigen::VectorXd x = flatten(s);
      for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        j.col(k) = (def.eval(unflatten(xp)) - def.eval(unflatten(xm))) / (2 * h);
      }
      return j;
    }
  }
  return j;
}

int select_pivot(const FeatureDef& def, const FeedbackVector& s) {
  const Eigen::MatrixXd j = feature_jacobian(def, s);
  int best = -1;
  double best_norm = -1.0;
  for (int i : def.complete_indices) {
    const double f = j.middleCols(2 * i, 2).squaredNorm();
    if (best < 0 || f > best_norm * (1 + 1e-12)) {
      best = i;
      best_norm = f;
    }
  }
  return best;
}

std::map<int, Point> complete_targets(const FeatureDef& def, const Eigen::VectorXd& y_d) {
  switch (def.kind) {
    case FeatureKind::SinglePoint:
    case FeatureKind::PointAngle: return {{0, Point(y_d[0], y_d[1])}};
    case FeatureKind::Custom: return def.targets(y_d);
  }
  return {};
}

double procrustes_angle(const FeedbackVector& s0, const std::map<int, Point>& known, int pivot) {
  const Point p0 = s0[static_cast<std::size_t>(pivot)];
  const Point pd = known.at(pivot);
  double c = 0.0, sn = 0.0;
  for (const auto& [i, target] : known) {
    const Point a = s0[static_cast<std::size_t>(i)] - p0;
    const Point b = target - pd;
    c += a.dot(b);
    sn += cross(a, b);
  }
  if (c == 0.0 && sn == 0.0) return 0.0;
  return std::atan2(sn, c);
}

FeedbackVector reference_distribution(const FeedbackVector& s0, const std::map<int, Point>& known, int pivot) {
  const Point p0 = s0[static_cast<std::size_t>(pivot)];
  const Point pd = known.at(pivot);
  const Eigen::Rotation2Dd r(known.size() > 1 ? procrustes_angle(s0, known, pivot) : 0.0);
  FeedbackVector ref(s0.size());
  for (std::size_t i = 0; i < s0.size(); ++i) {
    const auto it = known.find(static_cast<int>(i));
    ref[i] = it != known.end() ? it->second : Point(r * (s0[i] - p0) + pd);
  }
  return ref;
}

double evaluate_candidate(const TargetProblem& problem, const FeedbackVector& s, const Environment& env,
                          double lambda) {
  if (problem.incomplete.empty()) return 0.0;
  double dist = 0.0, clear = 0.0;
  for (int i : problem.incomplete) {
    const auto k = static_cast<std::size_t>(i);
    dist += (s[k] - problem.reference[k]).norm();
    clear += env.clearance(s[k]);
  }
  const double n = static_cast<double>(problem.incomplete.size());
  return (1.0 - lambda) * dist / n - lambda * clear / n;
}

std::vector<std::pair<int, int>> target_segments(const FeatureDef& def) {
  if (def.kind == FeatureKind::PointAngle) return {{0, 1}, {0, 2}};
  std::vector<std::pair<int, int>> segs;
  for (int i = 0; i + 1 < def.points; ++i) segs.emplace_back(i, i + 1);
  return segs;
}

bool target_feasible(const FeatureDef& def, const ShapeConstraintDef& shape, const FeedbackVector& s0,
                     const FeedbackVector& s, const Environment& env) {
  for (const Point& p : s) {
    if (!env.workspace().contains(p) || env.in_collision(p)) return false;
  }
  for (const auto& [a, b] : target_segments(def)) {
    if (!env.segment_free(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)], 0.0)) return false;
  }
  return shape.satisfied(s0, s);
}

FeedbackVector determine_target(const FeedbackVector& s0, const Eigen::VectorXd& y_d, const Environment& env,
                                const FeatureDef& def, const ShapeConstraintDef& shape, const TargetConfig& cfg) {
  check_size(def, s0);
  const std::map<int, Point> known = complete_targets(def, y_d);
  const int pivot = select_pivot(def, s0);

  TargetProblem problem;
  problem.s0 = s0;
  problem.reference = reference_distribution(s0, known, pivot);
  for (int i = 0; i < def.points; ++i) {
    if (!known.contains(i)) problem.incomplete.push_back(i);
  }
  if (problem.incomplete.empty()) {
    if (!target_feasible(def, shape, s0, problem.reference, env)) {
      throw Error(ErrorCode::NoFeasibleTarget, "specified target violates the target-state constraints");
    }
    return problem.reference;
  }

  const Chart chart = def.kind == FeatureKind::PointAngle
                          ? point_angle_chart(s0, problem.reference, known.at(0), y_d[2])
                          : free_point_chart(problem.reference, problem.incomplete);
  auto cost = [&](const Eigen::VectorXd& x) {
    const FeedbackVector s = chart.map(x);
    if (!target_feasible(def, shape, s0, s, env)) return kInf;
    if (def.kind == FeatureKind::Custom && (feature_eval(def, s) - y_d).norm() > 1e-6) return kInf;
    return evaluate_candidate(problem, s, env, cfg.lambda);
  };

  Rng rng(cfg.seed);
  double best = kInf;
  Eigen::VectorXd best_x;
  for (int start = 0; start < cfg.starts; ++start) {
    Eigen::VectorXd x = start == 0 ? chart.reference : chart.start(rng);
    double f = cost(x);
    if (!std::isfinite(f)) continue;
    Eigen::VectorXd step = chart.steps;
    for (int sweep = 0; sweep < 10000 && step.maxCoeff() > cfg.min_step; ++sweep) {
      bool improved = false;
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        for (double dir : {1.0, -1.0}) {
          Eigen::VectorXd y = x;
          y[k] += dir * step[k];
          const double fy = cost(y);
          if (fy < f) {
            x = y;
            f = fy;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorCode::NoFeasibleTarget, "no feasible target from any start");
  return chart.map(best_x);
}

}  // namespace dom
