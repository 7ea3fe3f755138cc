#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <vector>

#include "dom/workspace.hpp"

namespace dom {

enum class FeatureKind { SinglePoint, PointAngle, Custom };

struct FeatureDef {
  FeatureKind kind = FeatureKind::SinglePoint;
  int points = 1;  // K
  std::vector<int> complete_indices{0};
  // Custom features only.
  int dimension = 2;
  std::function<Eigen::VectorXd(const FeedbackVector&)> eval;
  std::function<std::map<int, Point>(const Eigen::VectorXd&)> targets;

  static FeatureDef single_point(int points = 1);
  static FeatureDef point_angle();
  int m() const;
};

/// Componentwise bounds on a shape measure H(S0, S).
struct ShapeConstraintDef {
  std::function<Eigen::VectorXd(const FeedbackVector& s0, const FeedbackVector& s)> measure;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  bool enabled() const { return static_cast<bool>(measure); }
  bool satisfied(const FeedbackVector& s0, const FeedbackVector& s, double tol = 1e-12) const;
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
};

/// Relative side-length change of the two angle sides s1-s2 and s1-s3.
Eigen::VectorXd side_length_change(const FeedbackVector& s0, const FeedbackVector& s);
ShapeConstraintDef side_length_bound(double ratio);

/// Angle at s1 between s2 - s1 and s3 - s1, radians.
double vertex_angle(const FeedbackVector& s);

Eigen::VectorXd feature_eval(const FeatureDef& def, const FeedbackVector& s);
/// m x 2K Jacobian; analytic for built-ins, central differences for custom.
Eigen::MatrixXd feature_jacobian(const FeatureDef& def, const FeedbackVector& s);

int select_pivot(const FeatureDef& def, const FeedbackVector& s);

/// Complete-point targets implied by y_d.
std::map<int, Point> complete_targets(const FeatureDef& def, const Eigen::VectorXd& y_d);

/// Rotation about the pivot that best aligns the complete points, then the
/// pivot translation; complete points keep their targets.
FeedbackVector reference_distribution(const FeedbackVector& s0, const std::map<int, Point>& known, int pivot);
double procrustes_angle(const FeedbackVector& s0, const std::map<int, Point>& known, int pivot);

struct TargetProblem {
  FeedbackVector s0;
  FeedbackVector reference;
  std::vector<int> incomplete;
};

double evaluate_candidate(const TargetProblem& problem, const FeedbackVector& s, const Environment& env,
                          double lambda);

/// Segments of the feedback vector that must stay free in the target state.
std::vector<std::pair<int, int>> target_segments(const FeatureDef& def);

bool target_feasible(const FeatureDef& def, const ShapeConstraintDef& shape, const FeedbackVector& s0,
                     const FeedbackVector& s, const Environment& env);

struct TargetConfig {
  double lambda = 0.5;
  int starts = 16;
  std::uint64_t seed = 0;
  double min_step = 1e-4;
};

FeedbackVector determine_target(const FeedbackVector& s0, const Eigen::VectorXd& y_d, const Environment& env,
                                const FeatureDef& def, const ShapeConstraintDef& shape, const TargetConfig& cfg);

}  // namespace dom
