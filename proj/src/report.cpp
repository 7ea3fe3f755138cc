#include "dom/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dom/error.hpp"

namespace dom {

namespace {

std::string points_attr(const std::vector<Point>& pts) {
  std::string s;
  for (const Point& p : pts) {
    if (!s.empty()) s += ' ';
    s += format_fixed(p.x(), 2) + "," + format_fixed(p.y(), 2);
  }
  return s;
}

nlohmann::json intervals(const std::vector<StepInterval>& list) {
  nlohmann::json out = nlohmann::json::array();
  for (const StepInterval& iv : list) out.push_back({iv.begin, iv.end});
  return out;
}

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

std::string format_fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos) s = std::string(buf[0] == '-' ? buf + 1 : buf);
  return s;
}

Svg::Svg(const Workspace& ws) : ws_(ws) {}

void Svg::environment(const Environment& env, bool passages) {
  for (const Obstacle& o : env.obstacles()) {
    items_.push_back("<polygon points=\"" + points_attr(o.polygon()) + "\" fill=\"#999999\" stroke=\"#555555\"/>");
  }
  if (passages) {
    for (const Passage& p : env.passages()) line(p.a, p.b, "#444444", 1.0, "4,3");
  }
}

void Svg::polyline(const std::vector<Point>& pts, const std::string& color, double width, const std::string& dash) {
  std::string item = "<polyline points=\"" + points_attr(pts) + "\" fill=\"none\" stroke=\"" + color +
                     "\" stroke-width=\"" + format_fixed(width, 2) + "\"";
  if (!dash.empty()) item += " stroke-dasharray=\"" + dash + "\"";
  items_.push_back(item + "/>");
}

void Svg::circle(const Point& c, double r, const std::string& color) {
  items_.push_back("<circle cx=\"" + format_fixed(c.x(), 2) + "\" cy=\"" + format_fixed(c.y(), 2) + "\" r=\"" +
                   format_fixed(r, 2) + "\" fill=\"" + color + "\"/>");
}

void Svg::line(const Point& a, const Point& b, const std::string& color, double width, const std::string& dash) {
  polyline({a, b}, color, width, dash);
}

std::string Svg::str() const {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_fixed(ws_.width, 0) << "\" height=\""
      << format_fixed(ws_.height, 0) << "\" viewBox=\"0 0 " << format_fixed(ws_.width, 0) << " "
      << format_fixed(ws_.height, 0) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << format_fixed(ws_.width, 0) << "\" height=\"" << format_fixed(ws_.height, 0)
      << "\" fill=\"white\" stroke=\"black\"/>\n";
  for (const std::string& item : items_) out << item << "\n";
  out << "</svg>\n";
  return out.str();
}

void Svg::save(const std::string& file) const {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::Schema, "cannot write " + file);
  out << str();
}

void write_telemetry_csv(std::ostream& out, const RunResult& result) {
  if (result.telemetry.empty()) {
    out << "t,mode\n";
    return;
  }
  const Telemetry& first = result.telemetry.front();
  out << "t,mode,a1,a2,a3,tau_pivot,d_do,d_ee,target_error,diagnostic";
  for (std::size_t i = 0; i < first.s.size(); ++i) out << ",s" << i << "_x,s" << i << "_y";
  for (std::size_t h = 0; h < first.r.size(); ++h) out << ",r" << h << "_x,r" << h << "_y";
  for (std::size_t i = 0; i < first.s.size(); ++i) out << ",e" << i;
  for (Eigen::Index k = 0; k < first.feature.size(); ++k) out << ",y" << k;
  for (Eigen::Index k = 0; k < first.shape.size(); ++k) out << ",h" << k;
  out << "\n";
  for (const Telemetry& t : result.telemetry) {
    out << t.t << ',' << to_string(t.mode) << ',' << t.a.a1 << ',' << t.a.a2 << ',' << t.a.a3 << ','
        << format_fixed(t.tau_pivot) << ',' << format_fixed(t.d_do) << ',' << format_fixed(t.d_ee) << ','
        << format_fixed(t.target_error) << ',' << format_fixed(t.diagnostic);
    for (const Point& p : t.s) out << ',' << format_fixed(p.x()) << ',' << format_fixed(p.y());
    for (const Point& p : t.r) out << ',' << format_fixed(p.x()) << ',' << format_fixed(p.y());
    for (std::size_t i = 0; i < first.s.size(); ++i) {
      out << ',' << (i < t.error_norms.size() ? format_fixed(t.error_norms[i]) : "");
    }
    for (Eigen::Index k = 0; k < t.feature.size(); ++k) out << ',' << format_fixed(t.feature[k]);
    for (Eigen::Index k = 0; k < t.shape.size(); ++k) out << ',' << format_fixed(t.shape[k]);
    out << "\n";
  }
}

void write_width_csv(std::ostream& out, const Path& path, const Environment& env, int samples) {
  out << "tau,width\n";
  for (const WidthSample& w : width_profile(path, env, samples)) {
    out << format_fixed(w.tau) << ',' << format_fixed(w.width) << "\n";
  }
}

nlohmann::json run_report(const Scenario& sc, const TrackOutcome& track, const std::string& telemetry_file) {
  const RunResult& r = track.result;
  const PathSet& set = track.transfer.set;
  nlohmann::json modes = nlohmann::json::array();
  for (Mode m : r.mode_sequence) modes.push_back(to_string(m));
  nlohmann::json risky = nlohmann::json::array();
  for (const Interval& w : track.transfer.risky) risky.push_back({w.lo, w.hi});
  nlohmann::json rep;
  rep["scenario"] = sc.name;
  rep["success"] = r.success;
  rep["steps"] = r.steps;
  rep["branch"] = set.certificate.branch == Branch::Basic ? "basic" : "general";
  rep["certificate"] = {{"strong_homotopic_like", set.certificate.strong_homotopic_like},
                        {"assumptions_hold", set.assumptions.holds()},
                        {"delta_p", track.transfer.delta_p}};
  rep["telemetry"] = telemetry_file;
  rep["final_point_error"] = r.final_point_error;
  rep["final_angle_error_deg"] = r.final_angle_error * 180.0 / M_PI;
  rep["min_do_distance"] = finite_or_zero(r.min_do_distance);
  if (sc.feature.kind == FeatureKind::PointAngle) rep["min_angle_deg"] = r.min_angle * 180.0 / M_PI;
  rep["relaxed_c1_intervals"] = intervals(r.relaxed_c1);
  rep["shape_violation_intervals"] = intervals(r.shape_violations);
  rep["stuck_events"] = r.stuck_events;
  rep["escape_failures"] = r.escape_failures;
  rep["collisions"] = r.collisions;
  rep["mode_sequence"] = modes;
  rep["risky_intervals"] = risky;
  rep["wall_time_s"] = track.wall_time;
  return rep;
}

}  // namespace dom
