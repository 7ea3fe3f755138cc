#pragma once

#include <vector>

#include "dom/path.hpp"

namespace dom {

struct ActivationVector {
  bool a1 = true;
  bool a2 = true;
  bool a3 = true;
  bool operator==(const ActivationVector&) const = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double t) const { return t >= lo && t <= hi; }
  bool operator==(const Interval&) const = default;
};
using RiskySegments = std::vector<Interval>;

enum class Phase { Execution, Target };

/// Unit tangent at tau: central difference of the neighbouring nodes at a
/// node, the segment direction elsewhere.
Point path_tangent(const Path& path, double tau);

/// Length of the free part of the normal line through path(tau) that
/// contains path(tau), bounded by obstacles and the workspace walls.
double local_path_width(const Path& path, double tau, const Environment& env);

struct WidthSample {
  double tau = 0.0;
  double width = 0.0;
};
std::vector<WidthSample> width_profile(const Path& path, const Environment& env, int samples);

/// Crossings whose passage is no wider than the matching chord, widened by
/// +-neighborhood in tau, clipped to [0, 1] and merged.
RiskySegments risky_segments(const Path& pivot_path, const std::vector<double>& chords, double neighborhood = 0.03);

/// Chord per pivot crossing: the larger of the transferred set's chord and
/// the pivot-centred sweep 2 * delta_p.
std::vector<double> crossing_chords(const Path& pivot_path, const std::vector<Path>& paths, double delta_p);

ActivationVector activate(const Point& pivot_now, const Path& pivot_path, const RiskySegments& risky, Phase phase);

}  // namespace dom
