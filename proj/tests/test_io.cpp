#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "comtraq/io.hpp"
#include "comtraq/task_gen.hpp"

using namespace comtraq;

namespace {

std::size_t count_substr(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

EpisodeLog sample_log() {
  RunConfig cfg;
  cfg.env.particles = 50;
  cfg.env.max_steps = 40;
  auto task = builtin_scenario("s1-like");
  return run_naive_mpc(task, cfg, 4);
}

}  // namespace

TEST(EpisodeCsv, HeaderColumnOrder) {
  std::stringstream ss;
  write_episode_csv(ss, EpisodeLog{});
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header,
            "step,x,y,v,psi,mean_x,mean_y,mean_v,mean_psi,std_x,std_y,std_v,std_psi,a,delta,"
            "u_l_requested,u_l_granted,u_l_denied,r_dqn,r_mpc,r_deviation,remaining,progress,q0,q1");
}

TEST(EpisodeCsv, RoundTripIsExact) {
  auto log = sample_log();
  ASSERT_GT(log.summary.updates_used, 0u);
  log.records[3].q = std::array<double, 2>{-1.25, 0.1 + 0.2};
  std::stringstream ss;
  write_episode_csv(ss, log);
  const auto back = read_episode_csv(ss);
  ASSERT_EQ(back.records.size(), log.records.size());
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& a = log.records[i];
    const auto& b = back.records[i];
    EXPECT_EQ(a.step, b.step);
    EXPECT_EQ(a.true_state, b.true_state);
    EXPECT_EQ(a.belief.mean, b.belief.mean);
    EXPECT_EQ(a.belief.std_psi, b.belief.std_psi);
    EXPECT_EQ(a.u_p.a, b.u_p.a);
    EXPECT_EQ(a.u_p.delta, b.u_p.delta);
    EXPECT_EQ(a.granted, b.granted);
    EXPECT_EQ(a.requested, b.requested);
    EXPECT_EQ(a.r_dqn, b.r_dqn);
    EXPECT_EQ(a.remaining, b.remaining);
    EXPECT_EQ(a.progress, b.progress);
    EXPECT_EQ(a.q, b.q);
  }
  EXPECT_EQ(back.summary.updates_used, log.summary.updates_used);
}

TEST(EpisodeCsv, RejectsMalformed) {
  std::stringstream wrong_header("step,x\n1,2\n");
  EXPECT_THROW(read_episode_csv(wrong_header), std::runtime_error);
  std::stringstream short_row(std::string(kEpisodeLogColumns) + "\n1,2,3\n");
  EXPECT_THROW(read_episode_csv(short_row), std::runtime_error);
  std::string bad = std::string(kEpisodeLogColumns) + "\nx";
  for (int i = 0; i < 24; ++i) bad += ",0";
  std::stringstream bad_value(bad + "\n");
  EXPECT_THROW(read_episode_csv(bad_value), std::runtime_error);
  EXPECT_THROW(read_episode_csv(std::string("/nonexistent/log.csv")), std::runtime_error);
}

TEST(TaskFile, SaveAndLoad) {
  const auto dir = std::filesystem::temp_directory_path() / "comtraq_test_io_task";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto task = builtin_scenario("s2-like");
  save_task_file(task, dir, "t0");
  const auto back = load_task_file((dir / "t0.json").string());
  EXPECT_EQ(back.budget, task.budget);
  EXPECT_EQ(back.trajectory.waypoints, task.trajectory.waypoints);

  std::ofstream(dir / "bad.json") << R"({"trajectory": "t0.csv"})";
  EXPECT_THROW(load_task_file((dir / "bad.json").string()), std::runtime_error);
  std::ofstream(dir / "neg.json") << R"({"trajectory": "t0.csv", "budget": -3})";
  EXPECT_THROW(load_task_file((dir / "neg.json").string()), std::runtime_error);
  std::ofstream(dir / "junk.json") << "{not json";
  EXPECT_THROW(load_task_file((dir / "junk.json").string()), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Svg, OneMarkerPerGrantedUpdate) {
  const auto log = sample_log();
  std::stringstream ss;
  write_svg(ss, log, builtin_scenario("s1-like").trajectory);
  const std::string svg = ss.str();
  EXPECT_EQ(count_substr(svg, "class=\"active-update\""), log.summary.updates_used);
  EXPECT_EQ(count_substr(svg, "class=\"reference\""), 1u);
  EXPECT_EQ(count_substr(svg, "class=\"executed\""), 1u);
  EXPECT_NE(svg.find("stroke=\"red\""), std::string::npos);
  EXPECT_NE(svg.find("stroke=\"blue\""), std::string::npos);
  EXPECT_EQ(svg.rfind("</svg>\n"), svg.size() - 7);
}

TEST(Json, MetricsKeys) {
  MetricsReport m;
  m.waypoints_followed = 12;
  m.mae = 0.25;
  const auto j = to_json(m);
  EXPECT_EQ(j["waypoints_followed"], 12);
  EXPECT_EQ(j["mae"], 0.25);
  EXPECT_EQ(j["goal_reached"], false);
}
