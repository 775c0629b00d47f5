#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "comtraq/belief.hpp"
#include "comtraq/dynamics.hpp"
#include "comtraq/mpc.hpp"
#include "comtraq/random.hpp"
#include "comtraq/trajectory.hpp"

namespace comtraq {

struct TaskSpec {
  ReferenceTrajectory trajectory;
  std::size_t budget = 0;

  void validate() const { trajectory.validate(); }
};

struct EnvConfig {
  double alpha = 0.5;
  double r_min = -1000.0;
  double goal_radius = 0.1;
  // 0 selects max_steps_per_waypoint * waypoint count.
  std::size_t max_steps = 0;
  std::size_t max_steps_per_waypoint = 3;
  double divergence_distance = 5.0;
  std::size_t particles = 500;
  std::size_t progress_window = 20;
  bool training_mode = false;

  std::size_t step_limit(const TaskSpec& task) const {
    return max_steps != 0 ? max_steps : max_steps_per_waypoint * task.trajectory.size();
  }

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("env: alpha must lie in [0, 1]");
    if (!(goal_radius > 0.0)) throw std::invalid_argument("env: goal_radius must be positive");
    if (!(r_min < 0.0)) throw std::invalid_argument("env: r_min must be negative");
    if (particles < 1) throw std::invalid_argument("env: particles must be >= 1");
    if (progress_window < 1) throw std::invalid_argument("env: progress_window must be >= 1");
    if (max_steps == 0 && max_steps_per_waypoint == 0)
      throw std::invalid_argument("env: step limit must be positive");
    if (!(divergence_distance > 0.0)) throw std::invalid_argument("env: divergence_distance must be positive");
  }
};

enum class Termination { kNone, kGoal, kMaxSteps, kDiverged };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::kGoal: return "goal";
    case Termination::kMaxSteps: return "max_steps";
    case Termination::kDiverged: return "diverged";
    default: return "none";
  }
}

struct EnvState {
  PhysicalState true_state;  // hidden from the agent
  ParticleSet belief;
  std::size_t budget = 0;
  std::size_t remaining = 0;
  std::size_t progress = 0;
  std::size_t steps = 0;
  bool done = false;
  Termination termination = Termination::kNone;
};

struct StepInfo {
  std::size_t progress = 0;
  std::size_t remaining = 0;
  BeliefSummary belief;
  bool requested = false;
  bool granted = false;
  bool violated = false;
};

struct StepOutcome {
  std::optional<PhysicalState> observation;
  double r_dqn = 0.0;
  double r_mpc = 0.0;
  double r_deviation = 0.0;
  bool done = false;
  StepInfo info;
};

// One stream for the true-state slip and one for particle propagation, so the
// executed noise sequence does not depend on how the belief is used.
struct EnvStreams {
  RandomStream slip;
  RandomStream particles;

  static EnvStreams from_seed(std::uint64_t seed, std::uint64_t episode) {
    return {RandomStream(derive_seed(seed, episode, Stream::kSlip)),
            RandomStream(derive_seed(seed, episode, Stream::kParticles))};
  }
};

inline EnvState reset(const TaskSpec& task, const EnvConfig& cfg) {
  task.validate();
  const auto& w = task.trajectory.waypoints;
  EnvState st;
  st.true_state = {w[0].x, w[0].y, 0.0, wrap_angle(std::atan2(w[1].y - w[0].y, w[1].x - w[0].x))};
  st.belief = init_delta(st.true_state, cfg.particles);
  st.budget = task.budget;
  st.remaining = task.budget;
  return st;
}

/// Exact state on an active update, nothing otherwise.
inline std::optional<PhysicalState> observe(const PhysicalState& s_true, int u_l) {
  if (u_l == 1) return s_true;
  return std::nullopt;
}

inline double compute_reward(double r_mpc, double deviation, bool violated, const EnvConfig& cfg) {
  if (violated) return cfg.r_min;
  return r_mpc - (1.0 - cfg.alpha) * deviation;
}

inline double nearest_waypoint_distance(const ReferenceTrajectory& traj, const Point2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& w : traj.waypoints) best = std::min(best, distance(w, p));
  return best;
}

/// Advances the episode by one step: budget accounting, stochastic transition,
/// belief propagation and (when granted) collapse onto the true post-transition
/// state, rewards, progress and termination.
///
/// Termination and progress read only the belief; the true state is read by
/// the transition, by `observe`, and by the deviation reward in training mode.
inline StepOutcome step(EnvState& env, const ControlInput& u_p, int u_l, double r_mpc_cost, const TaskSpec& task,
                        const EnvConfig& cfg, const DynamicsParams& dyn, EnvStreams& rng) {
  if (env.done) throw std::logic_error("env: step called on a finished episode");
  if (u_l != 0 && u_l != 1) throw std::invalid_argument("env: localization action must be 0 or 1");
  if (!(r_mpc_cost >= 0.0)) throw std::invalid_argument("env: MPC cost must be non-negative");

  StepOutcome out;
  out.info.requested = u_l == 1;
  out.info.violated = u_l == 1 && env.remaining == 0;
  out.info.granted = u_l == 1 && !out.info.violated;
  if (out.info.granted) --env.remaining;

  const ControlInput u = clamp_control(u_p, dyn);
  env.true_state = step_stochastic(env.true_state, u, dyn, rng.slip);
  env.belief = predict(env.belief, u, dyn, rng.particles);
  out.observation = observe(env.true_state, out.info.granted ? 1 : 0);
  if (out.observation) env.belief = collapse_to(env.belief, *out.observation);

  const BeliefSummary summary = summarize(env.belief);
  out.r_mpc = -cfg.alpha * r_mpc_cost;
  double deviation = 0.0;
  if (cfg.training_mode)
    deviation = std::hypot(env.true_state.x - summary.mean.x, env.true_state.y - summary.mean.y);
  out.r_deviation = (1.0 - cfg.alpha) * deviation;
  out.r_dqn = compute_reward(out.r_mpc, deviation, out.info.violated, cfg);

  const Point2 mean_pos{summary.mean.x, summary.mean.y};
  env.progress = nearest_progress_index(task.trajectory, mean_pos, env.progress, cfg.progress_window);
  ++env.steps;

  const bool near_end = env.progress + cfg.progress_window >= task.trajectory.last();
  if (near_end && distance(mean_pos, task.trajectory.goal()) <= cfg.goal_radius)
    env.termination = Termination::kGoal;
  else if (nearest_waypoint_distance(task.trajectory, mean_pos) > cfg.divergence_distance)
    env.termination = Termination::kDiverged;
  else if (env.steps >= cfg.step_limit(task))
    env.termination = Termination::kMaxSteps;
  env.done = env.termination != Termination::kNone;

  out.done = env.done;
  out.info.progress = env.progress;
  out.info.remaining = env.remaining;
  out.info.belief = summary;
  return out;
}

}  // namespace comtraq
