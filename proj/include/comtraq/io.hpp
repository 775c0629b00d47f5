#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "comtraq/env.hpp"
#include "comtraq/episode.hpp"
#include "comtraq/metrics.hpp"
#include "comtraq/trajectory.hpp"

namespace comtraq {

// ---------------------------------------------------------------------------
// Episode log CSV. Column order is part of the file format.

inline constexpr const char* kEpisodeLogColumns =
    "step,x,y,v,psi,mean_x,mean_y,mean_v,mean_psi,std_x,std_y,std_v,std_psi,a,delta,"
    "u_l_requested,u_l_granted,u_l_denied,r_dqn,r_mpc,r_deviation,remaining,progress,q0,q1";

inline void write_episode_csv(std::ostream& os, const EpisodeLog& log) {
  os << kEpisodeLogColumns << '\n';
  auto f = [](double v) { return format_double(v); };
  for (const auto& r : log.records) {
    os << r.step << ',' << f(r.true_state.x) << ',' << f(r.true_state.y) << ',' << f(r.true_state.v) << ','
       << f(r.true_state.psi) << ',' << f(r.belief.mean.x) << ',' << f(r.belief.mean.y) << ','
       << f(r.belief.mean.v) << ',' << f(r.belief.mean.psi) << ',' << f(r.belief.std_x) << ','
       << f(r.belief.std_y) << ',' << f(r.belief.std_v) << ',' << f(r.belief.std_psi) << ',' << f(r.u_p.a) << ','
       << f(r.u_p.delta) << ',' << int(r.requested) << ',' << int(r.granted) << ',' << int(r.denied) << ','
       << f(r.r_dqn) << ',' << f(r.r_mpc) << ',' << f(r.r_deviation) << ',' << r.remaining << ',' << r.progress
       << ',';
    if (r.q)
      os << f((*r.q)[0]) << ',' << f((*r.q)[1]);
    else
      os << ',';
    os << '\n';
  }
}

/// Reads a log written by write_episode_csv. Only the per-step records are
/// restored; the terminal summary lives in the JSON sidecar.
inline EpisodeLog read_episode_csv(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line) || line != kEpisodeLogColumns)
    throw std::runtime_error(name + ": not an episode log (unexpected header)");
  EpisodeLog log;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 25) throw std::runtime_error(name + ":" + std::to_string(lineno) + ": expected 25 columns");
    try {
      auto d = [&](std::size_t i) { return std::stod(cells[i]); };
      auto u = [&](std::size_t i) { return static_cast<std::size_t>(std::stoull(cells[i])); };
      StepRecord r;
      r.step = u(0);
      r.true_state = {d(1), d(2), d(3), d(4)};
      r.belief.mean = {d(5), d(6), d(7), d(8)};
      r.belief.std_x = d(9);
      r.belief.std_y = d(10);
      r.belief.std_v = d(11);
      r.belief.std_psi = d(12);
      r.u_p = {d(13), d(14)};
      r.requested = cells[15] == "1";
      r.granted = cells[16] == "1";
      r.denied = cells[17] == "1";
      r.r_dqn = d(18);
      r.r_mpc = d(19);
      r.r_deviation = d(20);
      r.remaining = u(21);
      r.progress = u(22);
      if (!cells[23].empty()) r.q = std::array<double, 2>{d(23), d(24)};
      log.records.push_back(r);
    } catch (const std::logic_error&) {
      throw std::runtime_error(name + ":" + std::to_string(lineno) + ": malformed value");
    }
  }
  log.summary.steps = log.records.size();
  for (const auto& r : log.records) log.summary.updates_used += r.granted ? 1 : 0;
  return log;
}

inline EpisodeLog read_episode_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open episode log: " + path);
  return read_episode_csv(is, path);
}

inline nlohmann::json to_json(const EpisodeSummary& s) {
  return {{"method", s.method},       {"budget", s.budget},           {"steps", s.steps},
          {"updates_used", s.updates_used}, {"goal_reached", s.goal_reached}, {"termination", s.termination}};
}

inline nlohmann::json to_json(const MetricsReport& m) {
  return {{"waypoints_followed", m.waypoints_followed},
          {"mae", m.mae},
          {"goal_reached", m.goal_reached},
          {"updates_used", m.updates_used},
          {"steps", m.steps}};
}

// ---------------------------------------------------------------------------
// Task files: {"trajectory": "<csv path, relative to this file>", "budget": N}

inline TaskSpec load_task_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open task file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse task file " + path + ": " + e.what());
  }
  if (!j.contains("trajectory") || !j["trajectory"].is_string())
    throw std::runtime_error(path + ": missing string key 'trajectory'");
  if (!j.contains("budget") || !j["budget"].is_number_unsigned())
    throw std::runtime_error(path + ": missing non-negative integer key 'budget'");
  std::filesystem::path traj = j["trajectory"].get<std::string>();
  if (traj.is_relative()) traj = std::filesystem::path(path).parent_path() / traj;
  return TaskSpec{read_trajectory_csv(traj.string()), j["budget"].get<std::size_t>()};
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
inline void save_task_file(const TaskSpec& task, const std::filesystem::path& dir, const std::string& stem) {
  write_trajectory_csv((dir / (stem + ".csv")).string(), task.trajectory);
  std::ofstream os(dir / (stem + ".json"));
  if (!os) throw std::runtime_error("cannot write task file in " + dir.string());
  os << nlohmann::json{{"trajectory", stem + ".csv"}, {"budget", task.budget}}.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// SVG overlay: reference in red, executed path in blue, start in green, goal
// in purple, one yellow marker per granted active update.

inline void write_svg(std::ostream& os, const EpisodeLog& log, const ReferenceTrajectory& traj) {
  double lo_x = traj.waypoints[0].x, hi_x = lo_x, lo_y = traj.waypoints[0].y, hi_y = lo_y;
  auto grow = [&](double x, double y) {
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  };
  for (const auto& p : traj.waypoints) grow(p.x, p.y);
  for (const auto& r : log.records) grow(r.true_state.x, r.true_state.y);
  const double margin = 0.3;
  lo_x -= margin;
  lo_y -= margin;
  hi_x += margin;
  hi_y += margin;
  const double px_per_m = 100.0;
  const double w = (hi_x - lo_x) * px_per_m, h = (hi_y - lo_y) * px_per_m;
  auto X = [&](double x) { return format_double(std::round((x - lo_x) * px_per_m * 100.0) / 100.0); };
  auto Y = [&](double y) { return format_double(std::round((hi_y - y) * px_per_m * 100.0) / 100.0); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << X(hi_x) << "\" height=\"" << Y(lo_y)
     << "\" viewBox=\"0 0 " << format_double(std::round(w * 100.0) / 100.0) << ' '
     << format_double(std::round(h * 100.0) / 100.0) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<polyline class=\"reference\" fill=\"none\" stroke=\"red\" stroke-width=\"2\" points=\"";
  for (const auto& p : traj.waypoints) os << X(p.x) << ',' << Y(p.y) << ' ';
  os << "\"/>\n";
  os << "<polyline class=\"executed\" fill=\"none\" stroke=\"blue\" stroke-width=\"2\" points=\"";
  os << X(log.start.x) << ',' << Y(log.start.y) << ' ';
  for (const auto& r : log.records) os << X(r.true_state.x) << ',' << Y(r.true_state.y) << ' ';
  os << "\"/>\n";
  for (const auto& r : log.records)
    if (r.granted)
      os << "<circle class=\"active-update\" cx=\"" << X(r.true_state.x) << "\" cy=\"" << Y(r.true_state.y)
         << "\" r=\"5\" fill=\"yellow\" stroke=\"black\"/>\n";
  os << "<circle class=\"start\" cx=\"" << X(traj.waypoints.front().x) << "\" cy=\"" << Y(traj.waypoints.front().y)
     << "\" r=\"7\" fill=\"green\"/>\n";
  os << "<circle class=\"goal\" cx=\"" << X(traj.goal().x) << "\" cy=\"" << Y(traj.goal().y)
     << "\" r=\"7\" fill=\"purple\"/>\n";
  os << "</svg>\n";
}

}  // namespace comtraq
