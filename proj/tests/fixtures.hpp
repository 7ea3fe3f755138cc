#pragma once

#include "dom/workspace.hpp"

namespace fixtures {

inline dom::Polygon box(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

// Two columns of three blocks; each column has a 30 px gap on the straight
// start-goal line and a 70 px gap further down.
inline dom::Environment fig8_env() {
  std::vector<dom::Obstacle> obs;
  int id = 0;
  for (double x0 : {200.0, 400.0}) {
    obs.emplace_back(id++, box(x0, 0, x0 + 40, 225));
    obs.emplace_back(id++, box(x0, 255, x0 + 40, 345));
    obs.emplace_back(id++, box(x0, 415, x0 + 40, 480));
  }
  return dom::Environment({640, 480}, std::move(obs));
}

}  // namespace fixtures

namespace fixtures {

// Six blocks in two columns: a 30 px gap and a 120 px gap per column.
inline dom::Environment fig10_env() {
  std::vector<dom::Obstacle> obs;
  int id = 0;
  for (double x0 : {200.0, 400.0}) {
    obs.emplace_back(id++, box(x0, 0, x0 + 40, 150));
    obs.emplace_back(id++, box(x0, 180, x0 + 40, 300));
    obs.emplace_back(id++, box(x0, 420, x0 + 40, 480));
  }
  return dom::Environment({640, 480}, std::move(obs));
}

inline const dom::FeedbackVector kFig10Start{{100, 330}, {100, 260}};
inline const dom::FeedbackVector kFig10Goal{{540, 330}, {540, 260}};

}  // namespace fixtures

namespace fixtures {

// One 40 px thick wall at x = 300 with a centred gap of `gap` px around y = 240.
inline dom::Environment wall_env(double gap) {
  std::vector<dom::Obstacle> obs;
  obs.emplace_back(0, box(300, 0, 340, 240 - gap / 2));
  obs.emplace_back(1, box(300, 240 + gap / 2, 340, 480));
  return dom::Environment({640, 480}, std::move(obs));
}

}  // namespace fixtures
