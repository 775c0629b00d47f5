#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "comtraq/episode.hpp"
#include "comtraq/trajectory.hpp"

namespace comtraq {

struct MetricsReport {
  std::size_t waypoints_followed = 0;
  double mae = 0.0;
  bool goal_reached = false;
  std::size_t updates_used = 0;
  std::size_t steps = 0;
};

/// Scores the executed (true) path against the reference.
///
/// - waypoints_followed: reference waypoints with at least one logged position
///   within `radius`.
/// - mae: mean over logged steps of the distance to the nearest waypoint.
/// - goal_reached: final logged position within `radius` of the last waypoint.
inline MetricsReport compute_metrics(const EpisodeLog& log, const ReferenceTrajectory& traj, double radius) {
  if (log.records.empty()) throw std::invalid_argument("compute_metrics: empty episode log");
  const auto& wp = traj.waypoints;
  std::vector<bool> followed(wp.size(), false);
  double err_sum = 0.0;
  const double r2 = radius * radius;
  for (const auto& rec : log.records) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < wp.size(); ++i) {
      const double dx = rec.true_state.x - wp[i].x, dy = rec.true_state.y - wp[i].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 <= r2) followed[i] = true;
      best = std::min(best, d2);
    }
    err_sum += std::sqrt(best);
  }
  MetricsReport m;
  for (bool f : followed) m.waypoints_followed += f ? 1 : 0;
  m.mae = err_sum / static_cast<double>(log.records.size());
  const auto& last = log.records.back().true_state;
  m.goal_reached = distance({last.x, last.y}, traj.goal()) <= radius;
  for (const auto& rec : log.records) m.updates_used += rec.granted ? 1 : 0;
  m.steps = log.records.size();
  return m;
}

}  // namespace comtraq
