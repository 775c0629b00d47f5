#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "comtraq/config.hpp"
#include "comtraq/dqn.hpp"
#include "comtraq/episode.hpp"
#include "comtraq/metrics.hpp"
#include "comtraq/stats.hpp"
#include "comtraq/task_gen.hpp"
#include "comtraq/training.hpp"

namespace comtraq {

// Substream offsets keeping the training and evaluation suites disjoint draws
// from the same master seed.
inline constexpr std::uint64_t kTrainSuiteStream = 1000;
inline constexpr std::uint64_t kEvalSuiteStream = 2000;

inline std::vector<TaskSpec> training_suite(const HarnessConfig& cfg) {
  return sample_task_suite(cfg.train.task_count, cfg.tasks, cfg.run.dyn,
                           derive_seed(cfg.seed, kTrainSuiteStream, Stream::kTasks));
}

/// Evaluation tasks: same generator, fixed budget ratio, independent seed.
inline std::vector<TaskSpec> eval_suite(const HarnessConfig& cfg) {
  TaskGenConfig gen = cfg.tasks;
  gen.rho_min = gen.rho_max = cfg.eval_rho;
  return sample_task_suite(cfg.eval_task_count, gen, cfg.run.dyn,
                           derive_seed(cfg.seed, kEvalSuiteStream, Stream::kTasks));
}

/// Learned policies available to a run; either may be absent.
struct Policies {
  std::optional<QNetwork> comtraq;
  std::optional<QNetwork> vanilla;
};

inline EpisodeLog run_method(Method m, const TaskSpec& task, const RunConfig& cfg, const Policies& nets,
                             std::uint64_t seed, std::uint64_t episode) {
  switch (m) {
    case Method::kPassiveMpc: return run_passive_mpc(task, cfg, seed, episode);
    case Method::kNaiveMpc: return run_naive_mpc(task, cfg, seed, episode);
    case Method::kComtraq:
      if (!nets.comtraq) throw std::runtime_error("no comtraq checkpoint given");
      return run_comtraq(task, *nets.comtraq, cfg, seed, episode);
    case Method::kVanillaDqn:
      if (!nets.vanilla) throw std::runtime_error("no vanilla-dqn checkpoint given");
      return run_vanilla_dqn_episode(task, *nets.vanilla, cfg, seed, episode);
  }
  throw std::logic_error("unhandled method");
}

/// Loads a checkpoint and checks that it was trained for `kind`.
inline QNetwork load_policy(const std::string& path, PolicyKind kind, const TrainConfig& cfg) {
  Checkpoint ck = load_checkpoint(path, network_sizes(kind, cfg));
  if (ck.kind != kind_name(kind))
    throw std::runtime_error("checkpoint " + path + " holds a '" + ck.kind + "' policy, expected '" +
                             kind_name(kind) + "'");
  return std::move(ck.net);
}

// ---------------------------------------------------------------------------
// Comparison runs

struct CompareRow {
  std::string task;
  Method method = Method::kPassiveMpc;
  std::size_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
};

struct NamedTask {
  std::string name;
  TaskSpec task;
};

/// Runs every method on every task for seeds 0..seeds-1 (episode substreams
/// of `master_seed`). Rows come out task-major, then in the fixed method
/// order, then by seed. A failing cell is recorded and the run continues.
/// `on_episode` (optional) sees every successful log.
template <class OnEpisode>
std::vector<CompareRow> run_compare(const std::vector<NamedTask>& tasks, const RunConfig& cfg, const Policies& nets,
                                    std::size_t seeds, std::uint64_t master_seed, OnEpisode&& on_episode) {
  std::vector<CompareRow> rows;
  rows.reserve(tasks.size() * std::size(kAllMethods) * seeds);
  for (const auto& nt : tasks)
    for (Method m : kAllMethods)
      for (std::size_t s = 0; s < seeds; ++s) {
        CompareRow row{nt.name, m, s, false, {}, {}};
        try {
          const EpisodeLog log = run_method(m, nt.task, cfg, nets, master_seed, s);
          row.metrics = compute_metrics(log, nt.task.trajectory, cfg.env.goal_radius);
          row.ok = true;
          on_episode(row, log);
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
  return rows;
}

inline std::vector<CompareRow> run_compare(const std::vector<NamedTask>& tasks, const RunConfig& cfg,
                                           const Policies& nets, std::size_t seeds, std::uint64_t master_seed) {
  return run_compare(tasks, cfg, nets, seeds, master_seed, [](const CompareRow&, const EpisodeLog&) {});
}

struct CompareCell {
  std::string task;
  Method method = Method::kPassiveMpc;
  std::size_t episodes = 0;
  std::size_t failures = 0;
  SampleStats waypoints_followed;
  SampleStats mae;
  SampleStats goal_reached;  // fraction of episodes
  SampleStats updates_used;
};

/// Aggregates rows per (task, method), keeping first-seen task order and the
/// fixed method order.
inline std::vector<CompareCell> aggregate(const std::vector<CompareRow>& rows) {
  std::vector<std::string> task_order;
  std::map<std::pair<std::string, int>, std::vector<const CompareRow*>> groups;
  for (const auto& r : rows) {
    if (std::find(task_order.begin(), task_order.end(), r.task) == task_order.end()) task_order.push_back(r.task);
    groups[{r.task, static_cast<int>(r.method)}].push_back(&r);
  }
  std::vector<CompareCell> cells;
  for (const auto& t : task_order)
    for (Method m : kAllMethods) {
      auto it = groups.find({t, static_cast<int>(m)});
      if (it == groups.end()) continue;
      CompareCell c{t, m, it->second.size(), 0, {}, {}, {}, {}};
      std::vector<double> wf, mae, goal, upd;
      for (const CompareRow* r : it->second) {
        if (!r->ok) {
          ++c.failures;
          continue;
        }
        wf.push_back(static_cast<double>(r->metrics.waypoints_followed));
        mae.push_back(r->metrics.mae);
        goal.push_back(r->metrics.goal_reached ? 1.0 : 0.0);
        upd.push_back(static_cast<double>(r->metrics.updates_used));
      }
      c.waypoints_followed = sample_stats(wf);
      c.mae = sample_stats(mae);
      c.goal_reached = sample_stats(goal);
      c.updates_used = sample_stats(upd);
      cells.push_back(std::move(c));
    }
  return cells;
}

inline void write_compare_rows_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "task,method,seed,status,waypoints_followed,mae,goal_reached,updates_used,steps,error\n";
  for (const auto& r : rows) {
    os << r.task << ',' << method_name(r.method) << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok)
      os << r.metrics.waypoints_followed << ',' << format_double(r.metrics.mae) << ','
         << int(r.metrics.goal_reached) << ',' << r.metrics.updates_used << ',' << r.metrics.steps << ',';
    else
      os << ",,,,,";
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << err << '\n';
  }
}

inline void write_compare_summary_csv(std::ostream& os, const std::vector<CompareCell>& cells) {
  os << "task,method,episodes,failures,waypoints_followed_mean,waypoints_followed_std,mae_mean,mae_std,"
        "goal_rate,updates_used_mean\n";
  for (const auto& c : cells)
    os << c.task << ',' << method_name(c.method) << ',' << c.episodes << ',' << c.failures << ','
       << format_double(c.waypoints_followed.mean) << ',' << format_double(c.waypoints_followed.stddev) << ','
       << format_double(c.mae.mean) << ',' << format_double(c.mae.stddev) << ',' << format_double(c.goal_reached.mean)
       << ',' << format_double(c.updates_used.mean) << '\n';
}

inline void write_compare_table(std::ostream& os, const std::vector<CompareCell>& cells) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-12s %18s %18s %8s %8s %6s\n", "task", "method", "waypoints", "mae [m]",
                "goal", "updates", "fail");
  os << buf;
  for (const auto& c : cells) {
    if (c.failures == c.episodes) {
      std::snprintf(buf, sizeof buf, "%-12s %-12s %18s %18s %8s %8s %6zu\n", c.task.c_str(), method_name(c.method),
                    "-", "-", "-", "-", c.failures);
    } else {
      char wf[40], mae[40];
      std::snprintf(wf, sizeof wf, "%.2f +- %.2f", c.waypoints_followed.mean, c.waypoints_followed.stddev);
      std::snprintf(mae, sizeof mae, "%.3f +- %.3f", c.mae.mean, c.mae.stddev);
      std::snprintf(buf, sizeof buf, "%-12s %-12s %18s %18s %7.0f%% %8.2f %6zu\n", c.task.c_str(),
                    method_name(c.method), wf, mae, 100.0 * c.goal_reached.mean, c.updates_used.mean, c.failures);
    }
    os << buf;
  }
}

}  // namespace comtraq
