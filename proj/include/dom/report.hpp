#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dom/scenario.hpp"

namespace dom {

/// Minimal SVG canvas in workspace pixel coordinates.
class Svg {
 public:
  explicit Svg(const Workspace& ws);

  void environment(const Environment& env, bool passages);
  void polyline(const std::vector<Point>& pts, const std::string& color, double width = 2.0,
                const std::string& dash = "");
  void circle(const Point& c, double r, const std::string& color);
  void line(const Point& a, const Point& b, const std::string& color, double width = 1.0,
            const std::string& dash = "");
  std::string str() const;
  void save(const std::string& file) const;

 private:
  Workspace ws_;
  std::vector<std::string> items_;
};

/// Per-step telemetry with fixed six-decimal formatting.
void write_telemetry_csv(std::ostream& out, const RunResult& result);
void write_width_csv(std::ostream& out, const Path& path, const Environment& env, int samples);

/// Structured run report.
nlohmann::json run_report(const Scenario& sc, const TrackOutcome& track, const std::string& telemetry_file);

std::string format_fixed(double v, int digits = 6);

}  // namespace dom
