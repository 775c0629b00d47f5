#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "comtraq/dynamics.hpp"
#include "comtraq/env.hpp"
#include "comtraq/random.hpp"
#include "comtraq/trajectory.hpp"

namespace comtraq {

struct TaskGenConfig {
  std::size_t min_control_points = 4;
  std::size_t max_control_points = 8;
  double workspace = 5.0;  // side of the square workspace, m
  double spacing = 0.1;    // arc-length resampling step, m
  std::size_t min_waypoints = 60;
  std::size_t max_waypoints = 250;
  double rho_min = 0.05;  // budget per waypoint
  double rho_max = 0.12;
  std::size_t max_attempts = 1000;

  void validate() const {
    if (min_control_points < 2 || min_control_points > max_control_points)
      throw std::invalid_argument("tasks: control point range is invalid");
    if (!(workspace > 0.0)) throw std::invalid_argument("tasks: workspace must be positive");
    if (!(spacing > 0.0 && spacing <= kMaxWaypointSpacing))
      throw std::invalid_argument("tasks: spacing must lie in (0, 0.2] m");
    if (min_waypoints < 2 || min_waypoints > max_waypoints)
      throw std::invalid_argument("tasks: waypoint count range is invalid");
    if (!(rho_min >= 0.0 && rho_min <= rho_max)) throw std::invalid_argument("tasks: rho range is invalid");
    if (max_attempts < 1) throw std::invalid_argument("tasks: max_attempts must be >= 1");
  }
};

/// Budget proportional to trajectory length.
inline std::size_t budget_for(std::size_t waypoint_count, double rho) {
  return static_cast<std::size_t>(std::llround(rho * static_cast<double>(waypoint_count)));
}

namespace detail {

// Centripetal Catmull-Rom segment between p1 and p2, evaluated at u in [0, 1].
inline Point2 catmull_rom(const Point2& p0, const Point2& p1, const Point2& p2, const Point2& p3, double u) {
  auto knot = [](double t, const Point2& a, const Point2& b) {
    return t + std::max(std::sqrt(distance(a, b)), 1e-9);
  };
  const double t0 = 0.0, t1 = knot(t0, p0, p1), t2 = knot(t1, p1, p2), t3 = knot(t2, p2, p3);
  const double t = t1 + u * (t2 - t1);
  auto lerp = [](const Point2& a, const Point2& b, double ta, double tb, double tt) {
    const double wa = (tb - tt) / (tb - ta), wb = (tt - ta) / (tb - ta);
    return Point2{wa * a.x + wb * b.x, wa * a.y + wb * b.y};
  };
  const Point2 a1 = lerp(p0, p1, t0, t1, t), a2 = lerp(p1, p2, t1, t2, t), a3 = lerp(p2, p3, t2, t3, t);
  const Point2 b1 = lerp(a1, a2, t0, t2, t), b2 = lerp(a2, a3, t1, t3, t);
  return lerp(b1, b2, t1, t2, t);
}

inline bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  auto cross = [](const Point2& o, const Point2& p, const Point2& q) {
    return (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x);
  };
  const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

}  // namespace detail

/// Dense polyline through the control points (interpolating spline).
inline std::vector<Point2> spline_through(const std::vector<Point2>& ctrl, std::size_t samples_per_segment = 200) {
  if (ctrl.size() < 2) throw std::invalid_argument("spline: need at least two control points");
  std::vector<Point2> ext;
  ext.reserve(ctrl.size() + 2);
  ext.push_back({2 * ctrl[0].x - ctrl[1].x, 2 * ctrl[0].y - ctrl[1].y});
  ext.insert(ext.end(), ctrl.begin(), ctrl.end());
  const auto& l1 = ctrl[ctrl.size() - 1];
  const auto& l2 = ctrl[ctrl.size() - 2];
  ext.push_back({2 * l1.x - l2.x, 2 * l1.y - l2.y});
  std::vector<Point2> dense;
  for (std::size_t s = 0; s + 3 < ext.size(); ++s) {
    for (std::size_t k = 0; k < samples_per_segment; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(samples_per_segment);
      dense.push_back(detail::catmull_rom(ext[s], ext[s + 1], ext[s + 2], ext[s + 3], u));
    }
  }
  dense.push_back(ctrl.back());
  return dense;
}

/// Points at arc length 0, spacing, 2*spacing, ... along the polyline. The end
/// point replaces the last sample if the remainder is shorter than spacing/5.
inline std::vector<Point2> resample_by_arc_length(const std::vector<Point2>& poly, double spacing) {
  std::vector<Point2> out{poly.front()};
  double carried = 0.0;  // arc length since the last emitted point
  for (std::size_t i = 1; i < poly.size(); ++i) {
    Point2 a = poly[i - 1];
    const Point2 b = poly[i];
    double seg = distance(a, b);
    while (carried + seg >= spacing) {
      const double need = spacing - carried;
      const double f = need / seg;
      a = {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
      out.push_back(a);
      seg -= need;
      carried = 0.0;
    }
    carried += seg;
  }
  if (carried >= spacing / 5.0 || out.size() < 2)
    out.push_back(poly.back());
  else
    out.back() = poly.back();
  return out;
}

/// Exactly `count` points evenly spaced in arc length.
inline std::vector<Point2> resample_to_count(const std::vector<Point2>& poly, std::size_t count) {
  double total = 0.0;
  for (std::size_t i = 1; i < poly.size(); ++i) total += distance(poly[i - 1], poly[i]);
  std::vector<Point2> out;
  out.reserve(count);
  std::size_t seg = 1;
  double seg_start = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(count - 1);
    while (seg + 1 < poly.size() && seg_start + distance(poly[seg - 1], poly[seg]) < target) {
      seg_start += distance(poly[seg - 1], poly[seg]);
      ++seg;
    }
    const double len = distance(poly[seg - 1], poly[seg]);
    const double f = len > 0.0 ? std::clamp((target - seg_start) / len, 0.0, 1.0) : 0.0;
    out.push_back({poly[seg - 1].x + f * (poly[seg].x - poly[seg - 1].x),
                   poly[seg - 1].y + f * (poly[seg].y - poly[seg - 1].y)});
  }
  out.back() = poly.back();
  return out;
}

inline bool self_intersects(const std::vector<Point2>& w) {
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    for (std::size_t j = i + 2; j + 1 < w.size(); ++j)
      if (detail::segments_intersect(w[i], w[i + 1], w[j], w[j + 1])) return true;
  return false;
}

/// Smallest circumradius over consecutive waypoint triples.
inline double min_turn_radius(const std::vector<Point2>& w) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    const double a = distance(w[i - 1], w[i]), b = distance(w[i], w[i + 1]), c = distance(w[i - 1], w[i + 1]);
    const double area2 =
        std::abs((w[i].x - w[i - 1].x) * (w[i + 1].y - w[i - 1].y) - (w[i].y - w[i - 1].y) * (w[i + 1].x - w[i - 1].x));
    if (area2 == 0.0) continue;
    best = std::min(best, a * b * c / (2.0 * area2));
  }
  return best;
}

inline double bicycle_min_radius(const DynamicsParams& dyn) {
  return dyn.wheelbase / std::tan(std::max(std::abs(dyn.delta_min), std::abs(dyn.delta_max)));
}

/// Random feasible trajectory-budget pair. Throws after max_attempts rejections.
inline TaskSpec sample_task(const TaskGenConfig& gen, const DynamicsParams& dyn, RandomStream& rng) {
  gen.validate();
  const double r_min = bicycle_min_radius(dyn);
  for (std::size_t attempt = 0; attempt < gen.max_attempts; ++attempt) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(gen.min_control_points),
                                                            static_cast<std::int64_t>(gen.max_control_points)));
    std::vector<Point2> ctrl;
    for (std::size_t i = 0; i < n; ++i) ctrl.push_back({rng.uniform(0.0, gen.workspace), rng.uniform(0.0, gen.workspace)});
    const double rho = rng.uniform(gen.rho_min, gen.rho_max);

    bool degenerate = false;
    for (std::size_t i = 1; i < n; ++i) degenerate |= distance(ctrl[i - 1], ctrl[i]) < 1e-6;
    if (degenerate) continue;

    auto wp = resample_by_arc_length(spline_through(ctrl), gen.spacing);
    if (wp.size() < gen.min_waypoints || wp.size() > gen.max_waypoints) continue;
    if (self_intersects(wp)) continue;
    if (min_turn_radius(wp) < r_min) continue;

    const std::size_t budget = budget_for(wp.size(), rho);
    TaskSpec task{ReferenceTrajectory{std::move(wp)}, budget};
    try {
      task.validate();
    } catch (const std::invalid_argument&) {
      continue;
    }
    return task;
  }
  throw std::runtime_error("sample_task: no feasible trajectory after " + std::to_string(gen.max_attempts) +
                           " attempts");
}

inline std::vector<TaskSpec> sample_task_suite(std::size_t count, const TaskGenConfig& gen,
                                               const DynamicsParams& dyn, std::uint64_t seed) {
  std::vector<TaskSpec> tasks;
  tasks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng(derive_seed(seed, i, Stream::kTasks));
    tasks.push_back(sample_task(gen, dyn, rng));
  }
  return tasks;
}

// Built-in scenarios sized like the two evaluation settings: a previously seen
// 135-waypoint path with budget 10 and a longer 245-waypoint one with budget 20.
inline TaskSpec builtin_scenario(const std::string& name) {
  std::vector<Point2> ctrl;
  std::size_t count = 0, budget = 0;
  if (name == "s1-like") {
    ctrl = {{0.57, 0.57}, {2.86, 1.14}, {4.11, 3.20}, {2.51, 4.57}, {0.91, 3.66}, {1.37, 5.71}, {3.43, 6.63}};
    count = 135;
    budget = 10;
  } else if (name == "s2-like") {
    ctrl = {{0.54, 0.54}, {3.23, 0.32}, {5.17, 1.94}, {3.87, 3.87}, {1.29, 3.44},
            {0.65, 5.81}, {2.80, 7.53}, {5.38, 6.46}, {7.10, 4.31}, {8.18, 6.89}};
    count = 245;
    budget = 20;
  } else {
    throw std::invalid_argument("unknown scenario '" + name + "' (valid: s1-like, s2-like)");
  }
  TaskSpec task{ReferenceTrajectory{resample_to_count(spline_through(ctrl), count)}, budget};
  task.validate();
  return task;
}

}  // namespace comtraq
