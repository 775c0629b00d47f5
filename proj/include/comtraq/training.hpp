#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "comtraq/dqn.hpp"
#include "comtraq/episode.hpp"
#include "comtraq/random.hpp"

namespace comtraq {

struct TrainLogRow {
  std::size_t episode = 0;
  std::size_t task_id = 0;
  double episode_return = 0.0;
  double loss_mean = std::numeric_limits<double>::quiet_NaN();  // NaN before warmup ends
  double epsilon = 0.0;
  std::size_t updates_used = 0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  std::vector<std::string> warnings;
  std::size_t env_steps = 0;
  std::size_t gradient_steps = 0;
  std::size_t target_syncs = 0;
};

inline void write_train_log_csv(std::ostream& os, const TrainLog& log) {
  os << "episode,task_id,return,loss_mean,epsilon,updates_used\n";
  for (const auto& r : log.rows) {
    os << r.episode << ',' << r.task_id << ',' << format_double(r.episode_return) << ','
       << (std::isnan(r.loss_mean) ? std::string("nan") : format_double(r.loss_mean)) << ','
       << format_double(r.epsilon) << ',' << r.updates_used << '\n';
  }
}

/// Records a warning when a checkpoint was produced under a different
/// training configuration.
inline bool check_config_digest(const Checkpoint& ck, const TrainConfig& cfg, TrainLog& log) {
  const std::string expected = config_digest(cfg);
  if (ck.config_digest == expected) return true;
  log.warnings.push_back("checkpoint config digest " + ck.config_digest + " differs from current config digest " +
                         expected);
  return false;
}

enum class PolicyKind { kScheduler, kJoint };

inline const char* kind_name(PolicyKind k) { return k == PolicyKind::kScheduler ? "comtraq" : "vanilla-dqn"; }

inline std::vector<std::size_t> network_sizes(PolicyKind kind, const TrainConfig& cfg) {
  std::vector<std::size_t> sizes{kFeatureCount};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(kind == PolicyKind::kScheduler ? 2 : static_cast<std::size_t>(JointActionSpace::kSize));
  return sizes;
}

struct TrainResult {
  QNetwork net;
  TrainLog log;
};

/// DQN with a target network, trained over a distribution of
/// trajectory-budget tasks. Each episode draws one task uniformly from
/// `tasks`; transitions from all tasks share one replay memory, so every
/// minibatch mixes tasks.
///
/// For the scheduler the MPC supplies the physical control and the network
/// picks u^l; for the joint baseline the network picks both. Training runs the
/// environment in training mode (deviation reward on) and does not mask the
/// update action on an empty budget, so the violation penalty is observed.
inline TrainResult meta_train(PolicyKind kind, const std::vector<TaskSpec>& tasks, const RunConfig& run_cfg,
                              const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  run_cfg.validate();
  if (tasks.empty()) throw std::invalid_argument("meta_train: empty task suite");

  RunConfig env_cfg = run_cfg;
  env_cfg.env.training_mode = true;

  QNetwork init(network_sizes(kind, cfg));
  RandomStream init_rng(derive_seed(seed, 0, Stream::kInit));
  init.init_uniform(init_rng);
  if (cfg.total_env_steps == 0) return {std::move(init), {}};

  DqnLearner learner(std::move(init), cfg, derive_seed(seed, 0, Stream::kReplay));
  const QNetwork& net = learner.net();
  RandomStream task_rng(derive_seed(seed, 1, Stream::kTasks));
  TrainLog log;

  std::size_t global_step = 0;
  for (std::size_t episode = 0; global_step < cfg.total_env_steps; ++episode) {
    const auto task_id =
        static_cast<std::size_t>(task_rng.uniform_int(0, static_cast<std::int64_t>(tasks.size()) - 1));
    const TaskSpec& task = tasks[task_id];
    auto rng = EpisodeStreams::from_seed(seed, episode);

    TrainLogRow row;
    row.episode = episode;
    row.task_id = task_id;
    row.epsilon = epsilon_at(global_step, cfg);
    double loss_sum = 0.0;
    std::size_t loss_n = 0;

    // Epsilon follows the global step inside the episode.
    double epsilon = row.epsilon;
    Policy policy;
    if (kind == PolicyKind::kScheduler) {
      policy = [&](const StepContext& ctx) {
        Decision d;
        d.q = net.forward(ctx.features);
        d.action = d.u_l = select_action(d.q, epsilon, ctx.env.remaining, false, rng.policy);
        return d;
      };
    } else {
      policy = [&](const StepContext& ctx) {
        std::array<bool, JointActionSpace::kSize> allowed;
        allowed.fill(true);
        Decision d;
        d.q = net.forward(ctx.features);
        d.action = epsilon_greedy(d.q, allowed, epsilon, rng.policy);
        const auto dec = JointActionSpace::decode(d.action);
        d.u_l = dec.localize;
        d.u_p = JointActionSpace::control(dec, env_cfg.dyn);
        return d;
      };
    }

    StepObserver observer = [&](const QInput& s, const Decision& d, const StepOutcome& out, const QInput& s_next) {
      row.episode_return += out.r_dqn;
      ++global_step;
      if (const auto loss = learner.observe(Transition{s, d.action, out.r_dqn, s_next, out.done})) {
        loss_sum += *loss;
        ++loss_n;
      }
      epsilon = epsilon_at(global_step, cfg);
      return global_step < cfg.total_env_steps;
    };

    const EpisodeLog ep = run_episode(task, env_cfg, kind_name(kind), rng, policy, observer);
    row.updates_used = ep.summary.updates_used;
    if (loss_n > 0) row.loss_mean = loss_sum / static_cast<double>(loss_n);
    log.rows.push_back(row);
  }
  log.env_steps = global_step;
  log.gradient_steps = learner.gradient_steps();
  log.target_syncs = learner.target_syncs();
  return {learner.net(), std::move(log)};
}

}  // namespace comtraq
