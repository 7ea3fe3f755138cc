#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dom/pathset.hpp"
#include "dom/regulation.hpp"
#include "dom/sim.hpp"
#include "dom/targeting.hpp"

namespace dom {

enum class Mode { TrackSet, AdjustConstraints, TrackEeEscape, FinalFix };
std::string to_string(Mode m);

/// J' = J + eta (dS - J dr) dr^T / (dr^T dr). Returns false and leaves J
/// untouched when |dr| <= 1e-9.
bool broyden_update(Eigen::MatrixXd& j, const Eigen::VectorXd& dr, const Eigen::VectorXd& ds, double eta);

/// SVD-based Moore-Penrose pseudoinverse.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

Eigen::VectorXd stack(const std::vector<Point>& pts);
std::vector<Point> unstack(const Eigen::VectorXd& v);

/// Densified path set with per-path projection hysteresis.
class PathTracker {
 public:
  PathTracker() = default;
  PathTracker(const std::vector<Path>& paths, int pivot, int min_nodes = 500);

  struct Projection {
    std::vector<double> tau;
    std::vector<Point> error;  // s_i - sigma_i(tau_i)
  };
  /// Nearest densified node per path. With `monotone` the index never moves
  /// back and the search window starts two nodes behind the last index.
  Projection project(const FeedbackVector& s, bool monotone);
  void reset_window() { window_reset_ = true; }

  const std::vector<Path>& paths() const { return paths_; }
  int pivot() const { return pivot_; }
  double pivot_tau() const { return tau_.empty() ? 0.0 : tau_[static_cast<std::size_t>(pivot_)]; }

 private:
  std::vector<Path> paths_;
  std::vector<std::size_t> index_;
  std::vector<double> tau_;
  int pivot_ = 0;
  bool first_ = true;
  bool window_reset_ = false;
};

/// Stateless projection: nearest densified node per path.
PathTracker::Projection project_onto_pathset(const FeedbackVector& s, const std::vector<Path>& paths);

/// e_S = S - Sigma(min(1, tau_p + xi)), with severe conflicts against the
/// pivot error removed by orthogonal projection.
Eigen::VectorXd tracking_error(const FeedbackVector& s, const std::vector<Path>& paths, int pivot, double tau_pivot,
                               double xi, double conflict_cos = -0.5);
/// Conflict removal on an already formed error.
Eigen::VectorXd remove_conflicts(Eigen::VectorXd e, int pivot, double conflict_cos);

Eigen::VectorXd clamp_norm(const Eigen::VectorXd& v, double v_max);

/// -J^+ K e, clamped to v_max.
Eigen::VectorXd tracking_command(const Eigen::VectorXd& e, const Eigen::MatrixXd& j, const Eigen::MatrixXd& k,
                                 double v_max);

struct ConstraintConfig {
  double k_e1 = 2000.0;
  double k_e2 = 2000.0;
  double k_c1 = 0.3;
  double k_c3 = 1.0;
  double threshold = 15.0;
};

struct ConstraintCommands {
  Eigen::VectorXd rdot_c1, rdot_c2, rdot_c3;
  Eigen::VectorXd g1, g2, g3;  // gradients of f_ci with respect to r
  double f1 = 0.0, f2 = 0.0, f3 = 0.0;
  double d_do = 0.0;
  double d_ee = 0.0;
};

struct ConstraintInputs {
  FeedbackVector s;
  FeedbackVector s0;  // reference for the shape measure
  std::vector<Point> r;
  DoDistance do_distance;
  int witness_feedback = 0;
};

/// Table-I potentials and command terms. Throws ZeroDistance when the DO or
/// an end effector touches an obstacle.
ConstraintCommands constraint_commands(const ConstraintInputs& in, const Environment& env, const Eigen::MatrixXd& j_d,
                                       const ShapeConstraintDef& shape, const ConstraintConfig& cfg);

/// I - g g^T / |g|^2, identity for a zero gradient.
Eigen::MatrixXd null_projector(const Eigen::VectorXd& g);

/// rdot_c2 + N2 rdot_c1 + N2 N1 rdot_c3 (+ N2 N1 N3 task); inactive terms drop.
Eigen::VectorXd constrained_command(const ConstraintCommands& c, const ActivationVector& a,
                                    const Eigen::VectorXd& task = Eigen::VectorXd());

struct EscapeConfig {
  double d0 = 6.0;
  double kappa_step = 0.01;
  double min_advance = 40.0;  // px along the pivot path
  PlannerConfig planner;
};

/// Local end-effector path past the next risky interval. Throws
/// EscapeInfeasible when no candidate target is clear or accepted.
Path plan_ee_escape(const Point& r_now, const Path& pivot_path, double tau_now, const RiskySegments& risky,
                    const Environment& env, const EscapeConfig& cfg);

/// -(J_y J_d)^+ K_F (y - y_d); angle components are wrapped.
Eigen::VectorXd pure_deformation_control(const FeatureDef& def, const FeedbackVector& s, const Eigen::VectorXd& y_d,
                                         const Eigen::MatrixXd& j_d, double k_f, double v_max);

struct ControlConfig {
  double k_s = 0.5;
  double xi = 0.02;
  double v_max = 4.0;
  double eta = 0.3;
  double probe = 2.0;
  double conflict_cos = -0.5;
  double fix_radius = 20.0;
  double success_px = 5.0;
  double success_deg = 5.0;
  int streak_limit = 5;  // stuck after more than this many violations in a row
  int budget = 3000;
  int escape_steps = 200;
  double escape_reach = 3.0;
  double neighborhood = 0.03;
  double k_f = 0.5;
  ConstraintConfig constraints;
  EscapeConfig escape;
};

struct Telemetry {
  int t = 0;
  Mode mode = Mode::TrackSet;
  ActivationVector a;
  FeedbackVector s;
  std::vector<Point> r;
  std::vector<double> error_norms;
  double tau_pivot = 0.0;
  double d_do = 0.0;
  double d_ee = 0.0;
  Eigen::VectorXd feature;
  double target_error = 0.0;
  double diagnostic = 0.0;  // e_S . dSigma/dtau
  Eigen::VectorXd shape;
};

struct StepInterval {
  int begin = 0;
  int end = 0;
};

struct RunResult {
  bool success = false;
  int steps = 0;
  std::vector<Telemetry> telemetry;
  std::vector<Mode> mode_sequence;  // distinct consecutive modes
  std::vector<StepInterval> relaxed_c1;
  std::vector<StepInterval> shape_violations;
  std::vector<int> stuck_events;      // steps at which the streak reached the limit
  std::vector<int> escape_failures;
  int stuck_streak_at_trigger = 0;
  double final_point_error = 0.0;
  double final_angle_error = 0.0;
  double min_do_distance = 0.0;
  double min_angle = 0.0;
  int collisions = 0;
  FeedbackVector s_d;
};

struct Task {
  FeatureDef feature;
  Eigen::VectorXd y_d;
  FeedbackVector s_d;
  FeedbackVector s0;
  ShapeConstraintDef shape;
};

/// Closed-loop path-set tracking (mode machine of track_set,
/// adjust_constraints, track_ee_escape and final_fix).
class Controller {
 public:
  Controller(const PathSet& set, const RiskySegments& risky, const Task& task, const Environment& env,
             ControlConfig cfg);

  /// Finite-difference probes of `probe` px per handle coordinate.
  void initialize(Plant& plant);
  /// One control step; returns false once finished (success).
  bool step(Plant& plant);
  RunResult run(Plant& plant);

  Mode mode() const { return mode_; }
  int streak() const { return streak_; }
  const Eigen::MatrixXd& jacobian() const { return j_; }
  const RunResult& result() const { return result_; }

 private:
  Eigen::VectorXd command_for(Plant& plant, const FeedbackVector& s, const std::vector<Point>& r, Telemetry& tel);
  bool violated(const ConstraintCommands& c, const ActivationVector& a) const;
  void set_mode(Mode m);
  bool finished(const FeedbackVector& s, Telemetry& tel) const;

  std::vector<Path> paths_;
  PathTracker tracker_;
  RiskySegments risky_;
  Task task_;
  const Environment* env_;
  ControlConfig cfg_;
  Eigen::MatrixXd j_;
  Mode mode_ = Mode::TrackSet;
  int streak_ = 0;
  int t_ = 0;
  std::optional<Path> escape_path_;
  double escape_tau_ = 0.0;
  int escape_started_ = 0;
  Point escape_offset_ = Point::Zero();
  RunResult result_;
};

/// Baseline: pure deformation control towards y_d without planning or
/// constraint handling.
RunResult run_pure(Plant& plant, const Task& task, const Environment& env, const ControlConfig& cfg);

/// Feature errors used for the success test: pivot point distance and, for
/// point_angle, the absolute angle difference in radians.
std::pair<double, double> feature_errors(const FeatureDef& def, const FeedbackVector& s, const Eigen::VectorXd& y_d);

}  // namespace dom
