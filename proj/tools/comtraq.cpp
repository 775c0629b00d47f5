// comtraq: train, evaluate and compare localization-budgeted trajectory
// trackers.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "comtraq/config.hpp"
#include "comtraq/harness.hpp"
#include "comtraq/io.hpp"
#include "comtraq/training.hpp"

namespace fs = std::filesystem;
using namespace comtraq;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config, "JSON config file (defaults when omitted)");
  cmd->add_option("--seed", c.seed, "Master seed, overrides the config");
  auto* o = cmd->add_option("--out", c.out, "Output directory");
  if (out_required) o->required();
}

HarnessConfig resolve_config(const Common& c) {
  HarnessConfig cfg = c.config.empty() ? HarnessConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::string valid_methods() {
  std::string s;
  for (Method m : kAllMethods) s += (s.empty() ? "" : ", ") + std::string(method_name(m));
  return s;
}

Method require_method(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw UsageError("unknown method '" + name + "'; valid methods: " + valid_methods());
  return *m;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

TaskSpec resolve_task(const std::string& task_file, const std::string& scenario) {
  if (!task_file.empty() && !scenario.empty()) throw UsageError("give either --task or --scenario, not both");
  if (!scenario.empty()) {
    try {
      return builtin_scenario(scenario);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (task_file.empty()) throw UsageError("one of --task or --scenario is required");
  return load_task_file(task_file);
}

Policies load_policies(const std::string& comtraq_ckpt, const std::string& vanilla_ckpt, const TrainConfig& cfg) {
  Policies p;
  if (!comtraq_ckpt.empty()) p.comtraq = load_policy(comtraq_ckpt, PolicyKind::kScheduler, cfg);
  if (!vanilla_ckpt.empty()) p.vanilla = load_policy(vanilla_ckpt, PolicyKind::kJoint, cfg);
  return p;
}

// ---------------------------------------------------------------------------

int cmd_train(const Common& common, const std::string& method_name_arg) {
  const HarnessConfig cfg = resolve_config(common);
  const Method method = require_method(method_name_arg);
  if (method != Method::kComtraq && method != Method::kVanillaDqn)
    throw UsageError("only comtraq and vanilla-dqn are trainable");
  const PolicyKind kind = method == Method::kComtraq ? PolicyKind::kScheduler : PolicyKind::kJoint;

  const fs::path out = common.out;
  fs::create_directories(out / "tasks");
  const auto tasks = training_suite(cfg);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "task_%03zu", i);
    save_task_file(tasks[i], out / "tasks", stem);
  }
  open_out(out / "config.json") << to_json(cfg).dump(2) << '\n';

  TrainResult res = meta_train(kind, tasks, cfg.run, cfg.train, cfg.seed);
  save_checkpoint(Checkpoint{res.net, kind_name(kind), config_digest(cfg.train), cfg.seed},
                  (out / "checkpoint.json").string());
  auto log_os = open_out(out / "train_log.csv");
  write_train_log_csv(log_os, res.log);
  for (const auto& w : res.log.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "trained " << kind_name(kind) << ": " << res.log.rows.size() << " episodes, " << res.log.env_steps
            << " env steps, " << res.log.gradient_steps << " gradient steps -> " << (out / "checkpoint.json").string()
            << '\n';
  return 0;
}

int cmd_eval(const Common& common, const std::string& method_name_arg, const std::string& checkpoint,
             const std::string& task_file, const std::string& scenario, std::uint64_t episode) {
  const HarnessConfig cfg = resolve_config(common);
  const Method method = require_method(method_name_arg);
  const TaskSpec task = resolve_task(task_file, scenario);
  Policies nets;
  if (method == Method::kComtraq || method == Method::kVanillaDqn) {
    if (checkpoint.empty()) throw UsageError(std::string(method_name(method)) + " needs --checkpoint");
    nets = method == Method::kComtraq ? load_policies(checkpoint, "", cfg.train) : load_policies("", checkpoint, cfg.train);
  }

  const EpisodeLog log = run_method(method, task, cfg.run, nets, cfg.seed, episode);
  const MetricsReport m = compute_metrics(log, task.trajectory, cfg.run.env.goal_radius);

  const fs::path out = common.out;
  fs::create_directories(out);
  auto csv = open_out(out / "episode.csv");
  write_episode_csv(csv, log);
  nlohmann::json j = to_json(m);
  j["summary"] = to_json(log.summary);
  j["seed"] = cfg.seed;
  j["episode"] = episode;
  open_out(out / "metrics.json") << j.dump(2) << '\n';
  auto svg = open_out(out / "overlay.svg");
  write_svg(svg, log, task.trajectory);
  std::cout << method_name(method) << ": waypoints_followed=" << m.waypoints_followed << '/' << task.trajectory.size()
            << " mae=" << m.mae << " goal=" << (m.goal_reached ? "yes" : "no") << " updates=" << m.updates_used << '/'
            << task.budget << " steps=" << m.steps << '\n';
  return 0;
}

int cmd_compare(const Common& common, const std::string& checkpoint, const std::string& vanilla_checkpoint,
                const std::vector<std::string>& task_files, const std::vector<std::string>& scenarios,
                std::size_t seeds) {
  const HarnessConfig cfg = resolve_config(common);
  if (seeds == 0) throw UsageError("--seeds must be positive");

  std::vector<NamedTask> tasks;
  for (const auto& f : task_files) tasks.push_back({fs::path(f).stem().string(), load_task_file(f)});
  for (const auto& s : scenarios) tasks.push_back({s, resolve_task("", s)});
  if (tasks.empty()) {
    const auto suite = eval_suite(cfg);
    for (std::size_t i = 0; i < suite.size(); ++i) tasks.push_back({"eval_" + std::to_string(i), suite[i]});
  }

  // A bad checkpoint only fails the cells that need it.
  Policies nets;
  std::string comtraq_err, vanilla_err;
  try {
    if (!checkpoint.empty()) nets.comtraq = load_policy(checkpoint, PolicyKind::kScheduler, cfg.train);
  } catch (const std::exception& e) {
    comtraq_err = e.what();
  }
  try {
    if (!vanilla_checkpoint.empty()) nets.vanilla = load_policy(vanilla_checkpoint, PolicyKind::kJoint, cfg.train);
  } catch (const std::exception& e) {
    vanilla_err = e.what();
  }

  const fs::path out = common.out;
  fs::create_directories(out / "logs");
  fs::create_directories(out / "tasks");
  for (const auto& t : tasks) save_task_file(t.task, out / "tasks", t.name);

  auto rows = run_compare(tasks, cfg.run, nets, seeds, cfg.seed, [&](const CompareRow& r, const EpisodeLog& log) {
    auto os = open_out(out / "logs" / (r.task + "_" + method_name(r.method) + "_" + std::to_string(r.seed) + ".csv"));
    write_episode_csv(os, log);
  });
  for (auto& r : rows) {
    if (r.ok) continue;
    if (r.method == Method::kComtraq && !comtraq_err.empty()) r.error = comtraq_err;
    if (r.method == Method::kVanillaDqn && !vanilla_err.empty()) r.error = vanilla_err;
  }

  const auto cells = aggregate(rows);
  auto rows_os = open_out(out / "episodes.csv");
  write_compare_rows_csv(rows_os, rows);
  auto sum_os = open_out(out / "summary.csv");
  write_compare_summary_csv(sum_os, cells);
  std::ostringstream table;
  write_compare_table(table, cells);
  open_out(out / "table.txt") << table.str();
  std::cout << table.str();

  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok ? 0 : 1;
  if (failed > 0) std::cerr << failed << " of " << rows.size() << " episodes failed; see episodes.csv\n";
  return 0;
}

int cmd_metrics(const Common& common, const std::string& log_path, const std::string& task_file,
                const std::string& scenario, std::optional<double> radius) {
  const HarnessConfig cfg = resolve_config(common);
  const TaskSpec task = resolve_task(task_file, scenario);
  const EpisodeLog log = read_episode_csv(log_path);
  const MetricsReport m = compute_metrics(log, task.trajectory, radius.value_or(cfg.run.env.goal_radius));
  const std::string text = to_json(m).dump(2) + "\n";
  if (common.out.empty()) {
    std::cout << text;
  } else {
    fs::create_directories(common.out);
    open_out(fs::path(common.out) / "metrics.json") << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localization-budgeted trajectory tracking: training, evaluation and comparison"};
  app.require_subcommand(1);

  Common train_c, eval_c, cmp_c, met_c;
  std::string train_method = "comtraq";
  auto* train = app.add_subcommand("train", "Meta-train a policy over a generated task suite");
  add_common(train, train_c, true);
  train->add_option("--method", train_method, "comtraq or vanilla-dqn");

  std::string eval_method, eval_ckpt, eval_task, eval_scenario;
  std::uint64_t eval_episode = 0;
  auto* eval = app.add_subcommand("eval", "Run one episode of one method and write its log, metrics and overlay");
  add_common(eval, eval_c, true);
  eval->add_option("--method", eval_method, "One of: " + valid_methods())->required();
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint for learned methods");
  eval->add_option("--task", eval_task, "Task JSON file");
  eval->add_option("--scenario", eval_scenario, "Built-in scenario: s1-like or s2-like");
  eval->add_option("--episode", eval_episode, "Episode index within the seed's substreams");

  std::string cmp_ckpt, cmp_vanilla;
  std::vector<std::string> cmp_tasks, cmp_scenarios;
  std::size_t cmp_seeds = 20;
  auto* compare = app.add_subcommand("compare", "Run all methods over tasks x seeds and tabulate");
  add_common(compare, cmp_c, true);
  compare->add_option("--checkpoint", cmp_ckpt, "comtraq checkpoint");
  compare->add_option("--vanilla-checkpoint", cmp_vanilla, "vanilla-dqn checkpoint");
  compare->add_option("--task", cmp_tasks, "Task JSON files (default: generated evaluation suite)");
  compare->add_option("--scenario", cmp_scenarios, "Built-in scenarios");
  compare->add_option("--seeds", cmp_seeds, "Seeds per task");

  std::string met_log, met_task, met_scenario;
  std::optional<double> met_radius;
  auto* metrics = app.add_subcommand("metrics", "Score an episode log against a task");
  add_common(metrics, met_c, false);
  metrics->add_option("--log", met_log, "Episode log CSV")->required();
  metrics->add_option("--task", met_task, "Task JSON file");
  metrics->add_option("--scenario", met_scenario, "Built-in scenario");
  metrics->add_option("--radius", met_radius, "Follow radius in meters (default: goal radius)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_c, train_method);
    if (*eval) return cmd_eval(eval_c, eval_method, eval_ckpt, eval_task, eval_scenario, eval_episode);
    if (*compare) return cmd_compare(cmp_c, cmp_ckpt, cmp_vanilla, cmp_tasks, cmp_scenarios, cmp_seeds);
    if (*metrics) return cmd_metrics(met_c, met_log, met_task, met_scenario, met_radius);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
