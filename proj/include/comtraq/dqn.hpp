#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "comtraq/belief.hpp"
#include "comtraq/qnetwork.hpp"
#include "comtraq/random.hpp"
#include "comtraq/trajectory.hpp"

namespace comtraq {

inline constexpr std::size_t kFeatureCount = 11;

// [x, y, v, sin psi, cos psi, std_x, std_y, std_v, std_psi, budget fraction, progress fraction]
// Positions are relative to the trajectory bounding box corner, scaled by its
// diagonal, so longer unseen trajectories land in the trained range.
using QInput = std::array<double, kFeatureCount>;

struct FeatureFrame {
  Point2 origin;
  double scale = 1.0;

  static FeatureFrame of(const ReferenceTrajectory& traj) {
    auto [lo, hi] = traj.bbox();
    const double d = traj.bbox_diagonal();
    return {lo, d > 0.0 ? d : 1.0};
  }
};

inline QInput featurize(const BeliefSummary& b, std::size_t remaining, std::size_t budget, std::size_t progress,
                        std::size_t traj_len, const FeatureFrame& frame) {
  if (budget < 1) throw std::invalid_argument("featurize: budget must be >= 1");
  if (traj_len < 2) throw std::invalid_argument("featurize: trajectory needs >= 2 waypoints");
  const double raw[] = {b.mean.x, b.mean.y, b.mean.v, b.mean.psi, b.std_x, b.std_y, b.std_v, b.std_psi};
  for (double r : raw)
    if (!std::isfinite(r)) throw std::invalid_argument("featurize: non-finite belief value");
  const double budget_frac = std::clamp(static_cast<double>(remaining) / static_cast<double>(budget), 0.0, 1.0);
  const double progress_frac =
      std::clamp(static_cast<double>(progress) / static_cast<double>(traj_len - 1), 0.0, 1.0);
  return {(b.mean.x - frame.origin.x) / frame.scale,
          (b.mean.y - frame.origin.y) / frame.scale,
          b.mean.v,
          std::sin(b.mean.psi),
          std::cos(b.mean.psi),
          b.std_x,
          b.std_y,
          b.std_v,
          b.std_psi,
          budget_frac,
          progress_frac};
}

inline QInput featurize(const BeliefSummary& b, std::size_t remaining, std::size_t budget, std::size_t progress,
                        const ReferenceTrajectory& traj) {
  return featurize(b, remaining, budget, progress, traj.size(), FeatureFrame::of(traj));
}

struct Transition {
  QInput input{};
  int action = 0;
  double reward = 0.0;
  QInput next_input{};
  bool done = false;
};

// Bounded FIFO; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay: capacity must be >= 1");
  }

  void push(const Transition& t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(t);
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }

  // Uniform with replacement.
  std::vector<Transition> sample(std::size_t n, RandomStream& rng) const {
    if (items_.empty()) throw std::logic_error("replay: cannot sample from an empty buffer");
    std::vector<Transition> out;
    out.reserve(n);
    const auto hi = static_cast<std::int64_t>(items_.size()) - 1;
    for (std::size_t i = 0; i < n; ++i) out.push_back(items_[static_cast<std::size_t>(rng.uniform_int(0, hi))]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

struct TrainConfig {
  double gamma = 0.99;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t target_sync_period = 1000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::size_t epsilon_decay_steps = 50000;
  std::size_t replay_capacity = 100000;
  std::size_t warmup = 1000;
  std::size_t total_env_steps = 100000;
  std::size_t task_count = 100;
  std::vector<std::size_t> hidden = {64, 64};

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("train: gamma must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
    if (batch_size < 1 || target_sync_period < 1 || epsilon_decay_steps < 1 || replay_capacity < 1 || task_count < 1)
      throw std::invalid_argument("train: counts must be >= 1");
    if (!(epsilon_end <= epsilon_start)) throw std::invalid_argument("train: epsilon_end exceeds epsilon_start");
    if (!(epsilon_start <= 1.0 && epsilon_end >= 0.0)) throw std::invalid_argument("train: epsilon outside [0, 1]");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"target_sync_period", c.target_sync_period},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_end", c.epsilon_end},
          {"epsilon_decay_steps", c.epsilon_decay_steps},
          {"replay_capacity", c.replay_capacity},
          {"warmup", c.warmup},
          {"total_env_steps", c.total_env_steps},
          {"task_count", c.task_count},
          {"hidden", c.hidden}};
}

/// FNV-1a over the canonical JSON form of the training config.
inline std::string config_digest(const nlohmann::json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_digest(const TrainConfig& c) { return config_digest(to_json(c)); }

/// Linear from epsilon_start to epsilon_end over epsilon_decay_steps, then flat.
inline double epsilon_at(std::size_t step, const TrainConfig& c) {
  if (step >= c.epsilon_decay_steps) return c.epsilon_end;
  if (step == 0) return c.epsilon_start;
  const double f = static_cast<double>(step) / static_cast<double>(c.epsilon_decay_steps);
  return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * f;
}

inline std::vector<double> td_targets(std::span<const Transition> batch, const QNetwork& target_net, double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
  std::vector<double> y;
  y.reserve(batch.size());
  for (const auto& t : batch) {
    if (t.done) {
      y.push_back(t.reward);
      continue;
    }
    const auto q = target_net.forward(t.next_input);
    y.push_back(t.reward + gamma * *std::max_element(q.begin(), q.end()));
  }
  return y;
}

/// One Adam step on the TD regression loss. Returns the pre-step loss.
inline double train_step(QNetwork& net, const QNetwork& target_net, std::span<const Transition> batch,
                         const TrainConfig& cfg, AdamState& opt) {
  if (batch.size() != cfg.batch_size)
    throw std::invalid_argument("train_step: batch has " + std::to_string(batch.size()) + " transitions, expected " +
                                std::to_string(cfg.batch_size));
  const auto targets = td_targets(batch, target_net, cfg.gamma);
  std::vector<std::vector<double>> inputs;
  std::vector<int> actions;
  inputs.reserve(batch.size());
  actions.reserve(batch.size());
  for (const auto& t : batch) {
    inputs.emplace_back(t.input.begin(), t.input.end());
    actions.push_back(t.action);
  }
  std::vector<double> grad;
  const double loss = net.mse_loss_and_grad(inputs, actions, targets, grad);
  if (!std::isfinite(loss)) {
    double max_target = 0.0;
    for (double y : targets) max_target = std::max(max_target, std::abs(y));
    std::ostringstream msg;
    msg << "train_step: non-finite loss (" << loss << "); adam step " << opt.t << ", max |target| " << max_target;
    throw std::runtime_error(msg.str());
  }
  opt.lr = cfg.learning_rate;
  opt.step(net.params(), grad);
  return loss;
}

/// Online network, target network, optimizer and replay memory. Each observed
/// transition is stored; once the memory holds max(warmup, batch_size)
/// transitions every further observation triggers one gradient step, and the
/// target network is overwritten by the online one every target_sync_period
/// observations.
class DqnLearner {
 public:
  DqnLearner(QNetwork net, const TrainConfig& cfg, std::uint64_t replay_seed)
      : cfg_(cfg), net_(std::move(net)), target_(net_), replay_(cfg.replay_capacity), rng_(replay_seed) {
    opt_.lr = cfg.learning_rate;
  }

  /// Returns the pre-step loss when a gradient step was taken.
  std::optional<double> observe(const Transition& t) {
    replay_.push(t);
    ++steps_;
    std::optional<double> loss;
    if (replay_.size() >= std::max(cfg_.warmup, cfg_.batch_size)) {
      const auto batch = replay_.sample(cfg_.batch_size, rng_);
      loss = train_step(net_, target_, batch, cfg_, opt_);
      ++gradient_steps_;
    }
    if (steps_ % cfg_.target_sync_period == 0) {
      target_ = net_;
      ++target_syncs_;
    }
    return loss;
  }

  const QNetwork& net() const { return net_; }
  const QNetwork& target() const { return target_; }
  const ReplayBuffer& replay() const { return replay_; }
  std::size_t steps() const { return steps_; }
  std::size_t gradient_steps() const { return gradient_steps_; }
  std::size_t target_syncs() const { return target_syncs_; }

 private:
  TrainConfig cfg_;
  QNetwork net_, target_;
  AdamState opt_;
  ReplayBuffer replay_;
  RandomStream rng_;
  std::size_t steps_ = 0, gradient_steps_ = 0, target_syncs_ = 0;
};

/// Epsilon-greedy over the allowed actions. Greedy ties resolve to the lowest
/// index (for the localization policy: do not localize). With epsilon == 0 the
/// random stream is not touched.
inline int epsilon_greedy(std::span<const double> q, std::span<const bool> allowed, double epsilon,
                          RandomStream& rng) {
  if (q.size() != allowed.size()) throw std::invalid_argument("epsilon_greedy: size mismatch");
  std::vector<int> ok;
  for (std::size_t i = 0; i < allowed.size(); ++i)
    if (allowed[i]) ok.push_back(static_cast<int>(i));
  if (ok.empty()) throw std::invalid_argument("epsilon_greedy: no allowed action");
  if (epsilon > 0.0 && rng.uniform() < epsilon)
    return ok[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ok.size()) - 1))];
  int best = ok.front();
  for (int a : ok)
    if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
  return best;
}

inline int select_action(std::span<const double> q, double epsilon, std::size_t remaining, bool mask_on_empty,
                         RandomStream& rng) {
  const std::array<bool, 2> allowed{true, !(mask_on_empty && remaining == 0)};
  return epsilon_greedy(q, allowed, epsilon, rng);
}

inline int select_action(const QNetwork& net, const QInput& in, double epsilon, std::size_t remaining,
                         bool mask_on_empty, RandomStream& rng) {
  const auto q = net.forward(in);
  return select_action(q, epsilon, remaining, mask_on_empty, rng);
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON container, weights row-major, doubles written with enough
// digits to round-trip exactly.

struct Checkpoint {
  QNetwork net;
  std::string kind;  // "comtraq" or "vanilla-dqn"
  std::string config_digest;
  std::uint64_t seed = 0;
};

inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  nlohmann::json j;
  j["format"] = "comtraq-qnetwork";
  j["version"] = kCheckpointVersion;
  j["kind"] = ck.kind;
  j["layer_sizes"] = ck.net.layer_sizes();
  j["config_digest"] = ck.config_digest;
  j["seed"] = ck.seed;
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < ck.net.num_layers(); ++l) {
    const auto w = ck.net.weights(l);
    const auto b = ck.net.bias(l);
    layers.push_back({{"weights", std::vector<double>(w.begin(), w.end())},
                      {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  j["layers"] = std::move(layers);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os << j.dump(1) << '\n';
  if (!os) throw std::runtime_error("failed writing checkpoint: " + path);
}

/// Loads and validates a checkpoint. When `expected_sizes` is non-empty the
/// stored layer sizes must match it exactly.
inline Checkpoint load_checkpoint(const std::string& path, const std::vector<std::size_t>& expected_sizes = {}) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupted checkpoint " + path + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "comtraq-qnetwork")
      throw std::runtime_error("checkpoint " + path + ": unknown format tag");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw std::runtime_error("checkpoint " + path + ": unsupported version " + j.at("version").dump());
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (!expected_sizes.empty() && sizes != expected_sizes) {
      auto fmt = [](const std::vector<std::size_t>& v) { return nlohmann::json(v).dump(); };
      throw std::runtime_error("checkpoint " + path + ": layer sizes " + fmt(sizes) + " do not match expected " +
                               fmt(expected_sizes));
    }
    Checkpoint ck{QNetwork(sizes), j.at("kind").get<std::string>(), j.at("config_digest").get<std::string>(),
                  j.at("seed").get<std::uint64_t>()};
    const auto& layers = j.at("layers");
    if (layers.size() != ck.net.num_layers())
      throw std::runtime_error("checkpoint " + path + ": expected " + std::to_string(ck.net.num_layers()) +
                               " layers, found " + std::to_string(layers.size()));
    for (std::size_t l = 0; l < ck.net.num_layers(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != ck.net.weights(l).size() || b.size() != ck.net.bias(l).size())
        throw std::runtime_error("checkpoint " + path + ": layer " + std::to_string(l) +
                                 " parameter count does not match its declared sizes");
      std::copy(w.begin(), w.end(), ck.net.weights(l).begin());
      std::copy(b.begin(), b.end(), ck.net.bias(l).begin());
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupted checkpoint " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("corrupted checkpoint " + path + ": " + e.what());
  }
}

}  // namespace comtraq
