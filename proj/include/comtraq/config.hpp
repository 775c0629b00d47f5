#pragma once

#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "comtraq/dqn.hpp"
#include "comtraq/episode.hpp"
#include "comtraq/task_gen.hpp"

namespace comtraq {

// Thrown for unreadable, malformed or incomplete configuration; carries the
// dotted key path when a key is at fault.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a harness run needs. Every key is required in the file.
struct HarnessConfig {
  std::uint64_t seed = 7;
  RunConfig run;
  TrainConfig train;
  TaskGenConfig tasks;
  // Task suite used by `compare` when no explicit tasks are given.
  std::size_t eval_task_count = 5;
  double eval_rho = 0.08;
};

namespace detail {

class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {}

  Reader section(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_object()) throw ConfigError("config key '" + join(key) + "' must be an object");
    return Reader(v, join(key));
  }

  template <class T>
  T get(const std::string& key) const {
    const auto& v = at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>)
          if (v.get<std::int64_t>() < 0 && !v.is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + join(key) + "' has the wrong type: " + v.dump());
    }
  }

 private:
  const nlohmann::json& at(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError("missing config key '" + join(key) + "'");
    return j_.at(key);
  }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& j_;
  std::string path_;
};

}  // namespace detail

inline HarnessConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  detail::Reader root(j, "");
  HarnessConfig c;
  c.seed = root.get<std::uint64_t>("seed");

  const auto d = root.section("dynamics");
  c.run.dyn.wheelbase = d.get<double>("wheelbase");
  c.run.dyn.dt = d.get<double>("dt");
  c.run.dyn.slip_sigma = deg2rad(d.get<double>("slip_sigma_deg"));
  c.run.dyn.a_min = d.get<double>("a_min");
  c.run.dyn.a_max = d.get<double>("a_max");
  c.run.dyn.delta_min = deg2rad(d.get<double>("delta_min_deg"));
  c.run.dyn.delta_max = deg2rad(d.get<double>("delta_max_deg"));
  c.run.dyn.v_min = d.get<double>("v_min");
  c.run.dyn.v_max = d.get<double>("v_max");

  const auto m = root.section("mpc");
  c.run.mpc.horizon = m.get<std::size_t>("horizon");
  c.run.mpc.population = m.get<std::size_t>("population");
  c.run.mpc.elites = m.get<std::size_t>("elites");
  c.run.mpc.iterations = m.get<std::size_t>("iterations");
  c.run.mpc.init_std = {m.get<double>("init_std_a"), m.get<double>("init_std_delta")};
  c.run.mpc.min_std = {m.get<double>("min_std_a"), m.get<double>("min_std_delta")};

  const auto e = root.section("env");
  c.run.env.alpha = e.get<double>("alpha");
  c.run.env.r_min = e.get<double>("r_min");
  c.run.env.goal_radius = e.get<double>("goal_radius");
  c.run.env.max_steps = e.get<std::size_t>("max_steps");
  c.run.env.max_steps_per_waypoint = e.get<std::size_t>("max_steps_per_waypoint");
  c.run.env.divergence_distance = e.get<double>("divergence_distance");
  c.run.env.particles = e.get<std::size_t>("particles");
  c.run.env.progress_window = e.get<std::size_t>("progress_window");

  const auto t = root.section("train");
  c.train.gamma = t.get<double>("gamma");
  c.train.learning_rate = t.get<double>("learning_rate");
  c.train.batch_size = t.get<std::size_t>("batch_size");
  c.train.target_sync_period = t.get<std::size_t>("target_sync_period");
  c.train.epsilon_start = t.get<double>("epsilon_start");
  c.train.epsilon_end = t.get<double>("epsilon_end");
  c.train.epsilon_decay_steps = t.get<std::size_t>("epsilon_decay_steps");
  c.train.replay_capacity = t.get<std::size_t>("replay_capacity");
  c.train.warmup = t.get<std::size_t>("warmup");
  c.train.total_env_steps = t.get<std::size_t>("total_env_steps");
  c.train.task_count = t.get<std::size_t>("task_count");
  c.train.hidden = t.get<std::vector<std::size_t>>("hidden");

  const auto g = root.section("tasks");
  c.tasks.min_control_points = g.get<std::size_t>("min_control_points");
  c.tasks.max_control_points = g.get<std::size_t>("max_control_points");
  c.tasks.workspace = g.get<double>("workspace");
  c.tasks.spacing = g.get<double>("spacing");
  c.tasks.min_waypoints = g.get<std::size_t>("min_waypoints");
  c.tasks.max_waypoints = g.get<std::size_t>("max_waypoints");
  c.tasks.rho_min = g.get<double>("rho_min");
  c.tasks.rho_max = g.get<double>("rho_max");
  c.tasks.max_attempts = g.get<std::size_t>("max_attempts");

  const auto ev = root.section("eval");
  c.eval_task_count = ev.get<std::size_t>("task_count");
  c.eval_rho = ev.get<double>("rho");

  try {
    c.run.validate();
    c.train.validate();
    c.tasks.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("invalid config: ") + ex.what());
  }
  return c;
}

inline HarnessConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("cannot parse config " + path + ": " + ex.what());
  }
  return parse_config(j);
}

inline nlohmann::json to_json(const HarnessConfig& c) {
  const auto& d = c.run.dyn;
  const auto& m = c.run.mpc;
  const auto& e = c.run.env;
  const auto& g = c.tasks;
  return {{"seed", c.seed},
          {"dynamics",
           {{"wheelbase", d.wheelbase},
            {"dt", d.dt},
            {"slip_sigma_deg", d.slip_sigma * 180.0 / std::numbers::pi},
            {"a_min", d.a_min},
            {"a_max", d.a_max},
            {"delta_min_deg", d.delta_min * 180.0 / std::numbers::pi},
            {"delta_max_deg", d.delta_max * 180.0 / std::numbers::pi},
            {"v_min", d.v_min},
            {"v_max", d.v_max}}},
          {"mpc",
           {{"horizon", m.horizon},
            {"population", m.population},
            {"elites", m.elites},
            {"iterations", m.iterations},
            {"init_std_a", m.init_std.a},
            {"init_std_delta", m.init_std.delta},
            {"min_std_a", m.min_std.a},
            {"min_std_delta", m.min_std.delta}}},
          {"env",
           {{"alpha", e.alpha},
            {"r_min", e.r_min},
            {"goal_radius", e.goal_radius},
            {"max_steps", e.max_steps},
            {"max_steps_per_waypoint", e.max_steps_per_waypoint},
            {"divergence_distance", e.divergence_distance},
            {"particles", e.particles},
            {"progress_window", e.progress_window}}},
          {"train", to_json(c.train)},
          {"tasks",
           {{"min_control_points", g.min_control_points},
            {"max_control_points", g.max_control_points},
            {"workspace", g.workspace},
            {"spacing", g.spacing},
            {"min_waypoints", g.min_waypoints},
            {"max_waypoints", g.max_waypoints},
            {"rho_min", g.rho_min},
            {"rho_max", g.rho_max},
            {"max_attempts", g.max_attempts}}},
          {"eval", {{"task_count", c.eval_task_count}, {"rho", c.eval_rho}}}};
}

}  // namespace comtraq
