#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "comtraq/dynamics.hpp"
#include "comtraq/random.hpp"
#include "comtraq/trajectory.hpp"

namespace comtraq {

struct MpcConfig {
  std::size_t horizon = 10;
  std::size_t population = 64;
  std::size_t elites = 8;
  std::size_t iterations = 5;
  ControlInput init_std{0.1, 0.3};
  ControlInput min_std{0.01, 0.03};

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("mpc: horizon must be >= 1");
    if (iterations < 1) throw std::invalid_argument("mpc: iterations must be >= 1");
    if (elites < 1 || elites > population)
      throw std::invalid_argument("mpc: elites must lie in [1, population]");
    if (!(init_std.a >= 0 && init_std.delta >= 0 && min_std.a >= 0 && min_std.delta >= 0))
      throw std::invalid_argument("mpc: standard deviations must be non-negative");
  }
};

struct MpcSolution {
  std::vector<ControlInput> controls;
  double optimal_cost = 0.0;
  // Best cost seen after each CEM iteration.
  std::vector<double> cost_trace;
};

/// Argmin of distance over [prev, min(prev + window, last)]; never regresses.
inline std::size_t nearest_progress_index(const ReferenceTrajectory& traj, const Point2& point,
                                          std::size_t prev, std::size_t window) {
  const std::size_t hi = std::min(prev + window, traj.last());
  std::size_t best = prev;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = prev; i <= hi; ++i) {
    const double d = distance(traj.waypoints[i], point);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// Waypoints progress+1 ... progress+h, padded with the goal.
inline std::vector<Point2> reference_window(const ReferenceTrajectory& traj, std::size_t progress,
                                            std::size_t h) {
  std::vector<Point2> refs;
  refs.reserve(h);
  for (std::size_t i = 1; i <= h; ++i) refs.push_back(traj.waypoints[std::min(progress + i, traj.last())]);
  return refs;
}

inline double tracking_cost(std::span<const PhysicalState> predicted, std::span<const Point2> refs) {
  if (predicted.size() != refs.size())
    throw std::invalid_argument("tracking_cost: predicted and reference lengths differ");
  double c = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double dx = predicted[i].x - refs[i].x;
    const double dy = predicted[i].y - refs[i].y;
    c += dx * dx + dy * dy;
  }
  return c;
}

/// Noiseless rollout of `controls` from `start`; returns s_1 ... s_H.
inline std::vector<PhysicalState> rollout(const PhysicalState& start, std::span<const ControlInput> controls,
                                          const DynamicsParams& dyn) {
  std::vector<PhysicalState> out;
  out.reserve(controls.size());
  PhysicalState s = start;
  for (const auto& u : controls) {
    s = step_deterministic(s, u, dyn);
    out.push_back(s);
  }
  return out;
}

namespace detail {

inline double rollout_cost(const PhysicalState& start, std::span<const ControlInput> controls,
                           std::span<const Point2> refs, const DynamicsParams& dyn) {
  PhysicalState s = start;
  double c = 0.0;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    s = step_deterministic(s, controls[i], dyn);
    const double dx = s.x - refs[i].x;
    const double dy = s.y - refs[i].y;
    c += dx * dx + dy * dy;
  }
  return c;
}

}  // namespace detail

/// Cross-entropy method over the control sequence for the finite-horizon
/// tracking objective, rolled out from the belief mean without noise.
///
/// The first candidate of the first iteration is the (clamped) initial mean
/// itself, so the result never scores worse than the warm start, or than the
/// all-zero sequence on a cold start.
inline MpcSolution solve(const PhysicalState& mean, const ReferenceTrajectory& traj, std::size_t progress,
                         const MpcConfig& cfg, const DynamicsParams& dyn,
                         std::optional<std::span<const ControlInput>> warm, RandomStream& rng) {
  const std::size_t H = cfg.horizon;
  if (progress > traj.last()) throw std::invalid_argument("mpc: progress index out of range");
  if (warm && warm->size() != H) throw std::invalid_argument("mpc: warm start length must equal horizon");

  const auto refs = reference_window(traj, progress, H);

  std::vector<ControlInput> mu(H), sigma(H, cfg.init_std);
  if (warm) {
    for (std::size_t t = 0; t < H; ++t) mu[t] = (*warm)[std::min(t + 1, H - 1)];
  }

  const std::size_t P = cfg.population;
  std::vector<ControlInput> samples(P * H);
  std::vector<double> costs(P);
  std::vector<std::size_t> order(P);

  MpcSolution sol;
  sol.controls.assign(H, ControlInput{});
  sol.optimal_cost = std::numeric_limits<double>::infinity();
  sol.cost_trace.reserve(cfg.iterations);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t j = 0; j < P; ++j) {
      auto* seq = &samples[j * H];
      for (std::size_t t = 0; t < H; ++t) {
        ControlInput u = mu[t];
        if (it != 0 || j != 0) {
          u.a += sigma[t].a * rng.normal();
          u.delta += sigma[t].delta * rng.normal();
        }
        seq[t] = clamp_control(u, dyn);
      }
      costs[j] = detail::rollout_cost(mean, std::span<const ControlInput>(seq, H), refs, dyn);
    }

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return costs[l] < costs[r]; });

    if (costs[order[0]] < sol.optimal_cost) {
      sol.optimal_cost = costs[order[0]];
      std::copy_n(&samples[order[0] * H], H, sol.controls.begin());
    }
    sol.cost_trace.push_back(sol.optimal_cost);

    const double inv = 1.0 / static_cast<double>(cfg.elites);
    for (std::size_t t = 0; t < H; ++t) {
      ControlInput m{};
      for (std::size_t e = 0; e < cfg.elites; ++e) {
        const auto& u = samples[order[e] * H + t];
        m.a += u.a * inv;
        m.delta += u.delta * inv;
      }
      ControlInput var{};
      for (std::size_t e = 0; e < cfg.elites; ++e) {
        const auto& u = samples[order[e] * H + t];
        var.a += (u.a - m.a) * (u.a - m.a) * inv;
        var.delta += (u.delta - m.delta) * (u.delta - m.delta) * inv;
      }
      mu[t] = m;
      sigma[t] = {std::max(std::sqrt(var.a), cfg.min_std.a), std::max(std::sqrt(var.delta), cfg.min_std.delta)};
    }
  }
  return sol;
}

}  // namespace comtraq
