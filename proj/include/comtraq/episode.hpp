#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "comtraq/belief.hpp"
#include "comtraq/dqn.hpp"
#include "comtraq/dynamics.hpp"
#include "comtraq/env.hpp"
#include "comtraq/mpc.hpp"
#include "comtraq/random.hpp"

namespace comtraq {

enum class Method { kPassiveMpc, kVanillaDqn, kNaiveMpc, kComtraq };

// Fixed reporting order: the baselines first, the learned scheduler last.
inline constexpr Method kAllMethods[] = {Method::kPassiveMpc, Method::kVanillaDqn, Method::kNaiveMpc,
                                         Method::kComtraq};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kPassiveMpc: return "passive-mpc";
    case Method::kVanillaDqn: return "vanilla-dqn";
    case Method::kNaiveMpc: return "naive-mpc";
    case Method::kComtraq: return "comtraq";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : kAllMethods)
    if (s == method_name(m)) return m;
  return std::nullopt;
}

struct RunConfig {
  DynamicsParams dyn;
  MpcConfig mpc;
  EnvConfig env;

  void validate() const {
    dyn.validate();
    mpc.validate();
    env.validate();
  }
};

struct StepRecord {
  std::size_t step = 0;  // 1-based count of executed transitions
  PhysicalState true_state;
  BeliefSummary belief;
  ControlInput u_p;
  bool requested = false;
  bool granted = false;
  bool denied = false;
  double r_dqn = 0.0;
  double r_mpc = 0.0;
  double r_deviation = 0.0;
  std::size_t remaining = 0;
  std::size_t progress = 0;
  std::optional<std::array<double, 2>> q;
};

struct EpisodeSummary {
  std::string method;
  std::size_t budget = 0;
  std::size_t steps = 0;
  std::size_t updates_used = 0;
  bool goal_reached = false;
  std::string termination;
};

struct EpisodeLog {
  PhysicalState start;
  std::vector<StepRecord> records;
  EpisodeSummary summary;
};

// Joint action space of the end-to-end baseline: acceleration bins x steering
// bins x {no update, update}, bins uniform over the control bounds.
struct JointActionSpace {
  static constexpr int kAccelBins = 5;
  static constexpr int kSteerBins = 7;
  static constexpr int kSize = kAccelBins * kSteerBins * 2;

  struct Decoded {
    int accel_bin = 0;
    int steer_bin = 0;
    int localize = 0;
  };

  static int encode(const Decoded& d) { return (d.accel_bin * kSteerBins + d.steer_bin) * 2 + d.localize; }
  static Decoded decode(int index) {
    if (index < 0 || index >= kSize) throw std::out_of_range("joint action index out of range");
    return {index / (kSteerBins * 2), (index / 2) % kSteerBins, index % 2};
  }
  static ControlInput control(const Decoded& d, const DynamicsParams& p) {
    auto bin = [](int i, int n, double lo, double hi) { return lo + (hi - lo) * i / (n - 1); };
    return {bin(d.accel_bin, kAccelBins, p.a_min, p.a_max), bin(d.steer_bin, kSteerBins, p.delta_min, p.delta_max)};
  }
};

// What a policy decides at one step. When `u_p` is empty the MPC supplies the
// physical control.
struct Decision {
  int u_l = 0;
  int action = 0;  // index into the policy's own action space
  std::optional<ControlInput> u_p;
  std::vector<double> q;
};

struct StepContext {
  const EnvState& env;
  const BeliefSummary& belief;
  const QInput& features;
};

using Policy = std::function<Decision(const StepContext&)>;
// Called after every step with (features before, decision, outcome, features
// after). Returning false ends the episode early.
using StepObserver = std::function<bool(const QInput&, const Decision&, const StepOutcome&, const QInput&)>;

/// Per-episode random substreams, derived from (seed, episode).
struct EpisodeStreams {
  EnvStreams env;
  RandomStream mpc;
  RandomStream policy;

  static EpisodeStreams from_seed(std::uint64_t seed, std::uint64_t episode) {
    return {EnvStreams::from_seed(seed, episode), RandomStream(derive_seed(seed, episode, Stream::kMpc)),
            RandomStream(derive_seed(seed, episode, Stream::kPolicy))};
  }
};

/// Tracking cost of holding one control for the whole MPC horizon from the
/// belief mean; the cost signal for policies that choose controls directly.
inline double held_control_cost(const PhysicalState& mean, const ControlInput& u, const TaskSpec& task,
                                std::size_t progress, const RunConfig& cfg) {
  const std::vector<ControlInput> seq(cfg.mpc.horizon, clamp_control(u, cfg.dyn));
  const auto states = rollout(mean, seq, cfg.dyn);
  const auto refs = reference_window(task.trajectory, progress, cfg.mpc.horizon);
  return tracking_cost(states, refs);
}

inline EpisodeLog run_episode(const TaskSpec& task, const RunConfig& cfg, const std::string& method_label,
                              EpisodeStreams& rng, const Policy& policy, const StepObserver& observer = {}) {
  EnvState env = reset(task, cfg.env);
  const FeatureFrame frame = FeatureFrame::of(task.trajectory);
  const std::size_t denom = std::max<std::size_t>(task.budget, 1);

  EpisodeLog log;
  log.start = env.true_state;
  log.summary.method = method_label;
  log.summary.budget = task.budget;

  BeliefSummary belief = summarize(env.belief);
  QInput features = featurize(belief, env.remaining, denom, env.progress, task.trajectory.size(), frame);
  std::optional<std::vector<ControlInput>> warm;

  while (!env.done) {
    Decision d = policy(StepContext{env, belief, features});
    ControlInput u_p;
    double cost = 0.0;
    if (d.u_p) {
      u_p = clamp_control(*d.u_p, cfg.dyn);
      cost = held_control_cost(belief.mean, u_p, task, env.progress, cfg);
    } else {
      std::optional<std::span<const ControlInput>> w;
      if (warm) w = std::span<const ControlInput>(*warm);
      MpcSolution sol = solve(belief.mean, task.trajectory, env.progress, cfg.mpc, cfg.dyn, w, rng.mpc);
      u_p = sol.controls.front();
      cost = sol.optimal_cost;
      warm = std::move(sol.controls);
    }

    const StepOutcome out = step(env, u_p, d.u_l, cost, task, cfg.env, cfg.dyn, rng.env);
    belief = out.info.belief;
    const QInput next = featurize(belief, env.remaining, denom, env.progress, task.trajectory.size(), frame);

    StepRecord r;
    r.step = env.steps;
    r.true_state = env.true_state;
    r.belief = belief;
    r.u_p = u_p;
    r.requested = out.info.requested;
    r.granted = out.info.granted;
    r.denied = out.info.violated;
    r.r_dqn = out.r_dqn;
    r.r_mpc = out.r_mpc;
    r.r_deviation = out.r_deviation;
    r.remaining = env.remaining;
    r.progress = env.progress;
    if (d.q.size() == 2) r.q = std::array<double, 2>{d.q[0], d.q[1]};
    log.records.push_back(r);
    if (r.granted) ++log.summary.updates_used;

    const bool keep_going = !observer || observer(features, d, out, next);
    features = next;
    if (!keep_going) break;
  }

  log.summary.steps = log.records.size();
  log.summary.termination = to_string(env.termination);
  if (!log.records.empty()) {
    const auto& last = log.records.back().true_state;
    log.summary.goal_reached = distance({last.x, last.y}, task.trajectory.goal()) <= cfg.env.goal_radius;
  }
  return log;
}

// ---------------------------------------------------------------------------
// Policies

inline Policy passive_policy() {
  return [](const StepContext&) { return Decision{}; };
}

inline std::size_t naive_interval(const TaskSpec& task) {
  return task.budget == 0 ? 0 : std::max<std::size_t>(task.trajectory.size() / task.budget, 1);
}

/// Localize on every `interval`-th step while budget remains, with
/// interval = floor(waypoints / budget).
inline Policy naive_policy(const TaskSpec& task) {
  return [interval = naive_interval(task)](const StepContext& ctx) {
    Decision d;
    const std::size_t step_number = ctx.env.steps + 1;
    if (interval != 0 && ctx.env.remaining > 0 && step_number % interval == 0) d.u_l = d.action = 1;
    return d;
  };
}

/// Localization scheduler backed by a Q-network over {0, 1}.
inline Policy scheduler_policy(const QNetwork& net, double epsilon, bool mask_on_empty, RandomStream& rng) {
  if (net.output_size() != 2) throw std::invalid_argument("scheduler policy needs a 2-output network");
  return [&net, epsilon, mask_on_empty, &rng](const StepContext& ctx) {
    Decision d;
    d.q = net.forward(ctx.features);
    d.action = d.u_l = select_action(d.q, epsilon, ctx.env.remaining, mask_on_empty, rng);
    return d;
  };
}

/// End-to-end policy choosing motion and localization jointly.
inline Policy joint_policy(const QNetwork& net, const DynamicsParams& dyn, double epsilon, bool mask_on_empty,
                           RandomStream& rng) {
  if (net.output_size() != static_cast<std::size_t>(JointActionSpace::kSize))
    throw std::invalid_argument("joint policy needs a " + std::to_string(JointActionSpace::kSize) +
                                "-output network");
  return [&net, dyn, epsilon, mask_on_empty, &rng](const StepContext& ctx) {
    std::array<bool, JointActionSpace::kSize> allowed{};
    const bool can_localize = !(mask_on_empty && ctx.env.remaining == 0);
    for (int i = 0; i < JointActionSpace::kSize; ++i) allowed[static_cast<std::size_t>(i)] = can_localize || i % 2 == 0;
    Decision d;
    d.q = net.forward(ctx.features);
    d.action = epsilon_greedy(d.q, allowed, epsilon, rng);
    const auto dec = JointActionSpace::decode(d.action);
    d.u_l = dec.localize;
    d.u_p = JointActionSpace::control(dec, dyn);
    return d;
  };
}

// ---------------------------------------------------------------------------
// Evaluation runners. The same (seed, episode) pair yields the same slip and
// particle noise for every method.

inline EpisodeLog run_passive_mpc(const TaskSpec& task, const RunConfig& cfg, std::uint64_t seed,
                                  std::uint64_t episode = 0) {
  auto rng = EpisodeStreams::from_seed(seed, episode);
  return run_episode(task, cfg, method_name(Method::kPassiveMpc), rng, passive_policy());
}

inline EpisodeLog run_naive_mpc(const TaskSpec& task, const RunConfig& cfg, std::uint64_t seed,
                                std::uint64_t episode = 0) {
  auto rng = EpisodeStreams::from_seed(seed, episode);
  return run_episode(task, cfg, method_name(Method::kNaiveMpc), rng, naive_policy(task));
}

inline EpisodeLog run_comtraq(const TaskSpec& task, const QNetwork& net, const RunConfig& cfg, std::uint64_t seed,
                              std::uint64_t episode = 0) {
  auto rng = EpisodeStreams::from_seed(seed, episode);
  return run_episode(task, cfg, method_name(Method::kComtraq), rng, scheduler_policy(net, 0.0, true, rng.policy));
}

inline EpisodeLog run_vanilla_dqn_episode(const TaskSpec& task, const QNetwork& net, const RunConfig& cfg,
                                          std::uint64_t seed, std::uint64_t episode = 0) {
  auto rng = EpisodeStreams::from_seed(seed, episode);
  return run_episode(task, cfg, method_name(Method::kVanillaDqn), rng,
                     joint_policy(net, cfg.dyn, 0.0, true, rng.policy));
}

}  // namespace comtraq
