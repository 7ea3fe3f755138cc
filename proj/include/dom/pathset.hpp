#pragma once

#include <optional>
#include <vector>

#include "dom/path.hpp"
#include "dom/planner.hpp"

namespace dom {

enum class Branch { Basic, General };

struct TransferAssumptionReport {
  double delta_p = 0.0;
  bool pivot_path_found_in_interior = false;
  bool s_d_ref_feasible = false;
  bool holds() const { return pivot_path_found_in_interior && s_d_ref_feasible; }
};

struct Certificate {
  Branch branch = Branch::Basic;
  bool strong_homotopic_like = false;
};

/// Pivot crossing shift applied during repositioning, for display.
struct RepositionMove {
  Point from = Point::Zero();
  Point to = Point::Zero();
};

struct PathSet {
  std::vector<Path> paths;
  int pivot_index = 0;
  Certificate certificate;
  TransferAssumptionReport assumptions;
  Path pivot_raw;
  std::vector<RepositionMove> moves;
};

struct PathSetConfig {
  PlannerConfig planner;
  double general_delta = 10.0;  // planner clearance when the assumptions fail
  double delta_lo = 2.0;
  double homotopy_resolution = 2.0;
  int smooth_samples = 200;     // 0 disables smoothing
  int max_extra_anchors = 8;
};

/// Shift applied at parameter `tau` of a path; shifts in between blend linearly.
struct Anchor {
  double tau = 0.0;
  Point shift = Point::Zero();
};

double theta(const FeedbackVector& s, const Point& sp);
double delta_p(const FeedbackVector& s0, const FeedbackVector& sd, int pivot);

/// Quadratic clamped B-spline through the node control polygon, resampled to
/// `samples` nodes. Returns the input when the result is not clear of
/// obstacles by `delta`.
Path smooth(const Path& path, int samples, const Environment& env, double delta = 0.0);
Path smooth(const Path& path, int samples);

/// Collision-free test of psi(x, tau) = (1 - x) a(tau) + x b(tau) on a grid
/// whose neighbouring samples differ by less than `resolution`.
bool straight_line_homotopy_feasible(const Path& a, const Path& b, const Environment& env, double resolution);

/// sigma'_{i,j}: straight lead-in from b(0) to a(0), then a, then a lead-out
/// from a(1) to b(1).
Path end_concatenated(const Path& a, const Path& b);

bool strong_homotopic_like(const std::vector<Path>& paths, const Environment& env, double resolution);

/// Topological homotopic-like test: the loop sigma'_{i,j} * reverse(sigma_j)
/// must be null-homotopic in the free space and both connectors free.
bool homotopic_like(const Path& a, const Path& b, const Environment& env);

/// Signed obstacle crossings of a closed polyline, freely reduced.
std::vector<int> loop_word(const std::vector<Point>& loop, const Environment& env);

PathSet basic_forward_transfer(const FeedbackVector& s0, const FeedbackVector& sd, int pivot, const Path& pivot_path,
                               const Environment& env);

/// Crossing parameter of `path` with the infinite line through the passage,
/// nearest to `near_tau`.
std::optional<double> line_crossing(const Path& path, const Passage& passage, double near_tau);

struct Chord {
  std::vector<Point> points;  // one per path
  double length = 0.0;
};
/// Intersections of every path with the passage line near `near_tau`.
Chord chord(const std::vector<Path>& paths, const Passage& passage, double near_tau);

/// Coordinate of `p` along the passage witness, 0 at `a`, width at `b`.
double passage_coordinate(const Passage& passage, const Point& p);

/// Linear remap of `path` through the anchors (sorted by tau). Anchor
/// parameters are inserted as nodes so the remapped path hits each anchor
/// target exactly.
Path remap(const Path& path, const std::vector<Anchor>& anchors);

struct Repositioned {
  Path path;
  std::vector<Anchor> anchors;
  std::vector<RepositionMove> moves;
};
Repositioned reposition_pivot(const Path& pivot_path, const FeedbackVector& s0, int pivot, const Environment& env,
                              double delta_lo);

/// min(gamma1 / beta1, gamma2 / beta2) capped at 1; a zero beta drops its term.
double compression_ratio(double gamma1, double beta1, double gamma2, double beta2);

std::vector<Path> deformable_transfer(const FeedbackVector& s0, const FeedbackVector& sd, int pivot,
                                      const Path& pivot_path, const Environment& env, const PathSetConfig& cfg);

/// Transfer assumption 2: the translated configuration keeps every point in
/// the delta_lo interior and consecutive points joined by free segments.
bool reference_feasible(const FeedbackVector& s0, const FeedbackVector& sd, int pivot, const Environment& env,
                        double delta_lo);

PathSet generate_path_set(const FeedbackVector& s0, const FeedbackVector& sd, int pivot, const Environment& env,
                          const PathSetConfig& cfg);

}  // namespace dom
