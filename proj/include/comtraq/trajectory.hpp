#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace comtraq {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline constexpr double kMaxWaypointSpacing = 0.2;

struct ReferenceTrajectory {
  std::vector<Point2> waypoints;
  double nominal_speed = 0.3;

  std::size_t size() const { return waypoints.size(); }
  std::size_t last() const { return waypoints.size() - 1; }
  const Point2& goal() const { return waypoints.back(); }

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const {
    if (waypoints.size() < 2) throw std::invalid_argument("trajectory: needs at least 2 waypoints");
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      if (!std::isfinite(waypoints[i].x) || !std::isfinite(waypoints[i].y))
        throw std::invalid_argument("trajectory: non-finite waypoint " + std::to_string(i));
      if (i == 0) continue;
      const double d = distance(waypoints[i - 1], waypoints[i]);
      if (d == 0.0)
        throw std::invalid_argument("trajectory: duplicate consecutive waypoint " + std::to_string(i));
      if (d > kMaxWaypointSpacing + 1e-9)
        throw std::invalid_argument("trajectory: spacing " + std::to_string(d) + " m exceeds " +
                                    std::to_string(kMaxWaypointSpacing) + " m at waypoint " +
                                    std::to_string(i));
    }
  }

  double length() const {
    double l = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) l += distance(waypoints[i - 1], waypoints[i]);
    return l;
  }

  // Diagonal of the axis-aligned bounding box, and its lower-left corner.
  double bbox_diagonal() const {
    auto [lo, hi] = bbox();
    return std::hypot(hi.x - lo.x, hi.y - lo.y);
  }
  std::pair<Point2, Point2> bbox() const {
    Point2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Point2 hi{-lo.x, -lo.y};
    for (const auto& p : waypoints) {
      lo.x = std::min(lo.x, p.x);
      lo.y = std::min(lo.y, p.y);
      hi.x = std::max(hi.x, p.x);
      hi.y = std::max(hi.y, p.y);
    }
    return {lo, hi};
  }
};

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trajectory_csv(std::ostream& os, const ReferenceTrajectory& t) {
  os << "x,y\n";
  for (const auto& p : t.waypoints) os << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

inline void write_trajectory_csv(const std::string& path, const ReferenceTrajectory& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write trajectory file: " + path);
  write_trajectory_csv(os, t);
}

inline ReferenceTrajectory read_trajectory_csv(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(name + ": empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y") throw std::runtime_error(name + ": expected header 'x,y', got '" + line + "'");
  ReferenceTrajectory t;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(name + ":" + std::to_string(lineno) + ": expected 'x,y'");
    try {
      std::size_t used = 0;
      const std::string xs = line.substr(0, comma), ys = line.substr(comma + 1);
      Point2 p;
      p.x = std::stod(xs, &used);
      if (used != xs.size()) throw std::invalid_argument("trailing");
      p.y = std::stod(ys, &used);
      if (used != ys.size()) throw std::invalid_argument("trailing");
      t.waypoints.push_back(p);
    } catch (const std::logic_error&) {
      throw std::runtime_error(name + ":" + std::to_string(lineno) + ": malformed number in '" + line + "'");
    }
  }
  t.validate();
  return t;
}

inline ReferenceTrajectory read_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open trajectory file: " + path);
  return read_trajectory_csv(is, path);
}

}  // namespace comtraq
