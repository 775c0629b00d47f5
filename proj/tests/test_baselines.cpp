#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "comtraq/episode.hpp"
#include "comtraq/task_gen.hpp"
#include "comtraq/training.hpp"

using namespace comtraq;

namespace {

RunConfig small_run() {
  RunConfig c;
  c.env.particles = 100;
  return c;
}

TaskSpec arc_task(std::size_t n, std::size_t budget) {
  // Gentle left-hand arc, radius 3 m, 0.1 m spacing.
  TaskSpec t;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = 0.1 * double(i) / 3.0;
    t.trajectory.waypoints.push_back({3 * std::sin(th), 3 * (1 - std::cos(th))});
  }
  t.budget = budget;
  return t;
}

}  // namespace

TEST(Methods, NamesRoundTrip) {
  std::set<std::string> names;
  for (Method m : kAllMethods) {
    names.insert(method_name(m));
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_EQ(names, (std::set<std::string>{"passive-mpc", "vanilla-dqn", "naive-mpc", "comtraq"}));
  EXPECT_FALSE(parse_method("random").has_value());
}

TEST(Passive, NeverLocalizes) {
  const auto task = arc_task(40, 5);
  const auto log = run_passive_mpc(task, small_run(), 11);
  EXPECT_EQ(log.summary.updates_used, 0u);
  for (const auto& r : log.records) {
    EXPECT_FALSE(r.requested);
    EXPECT_EQ(r.remaining, 5u);
  }
}

TEST(Passive, WithoutSlipTracksLikeFullObservability) {
  auto cfg = small_run();
  cfg.dyn.slip_sigma = 0.0;
  const auto task = arc_task(40, 0);
  const auto log = run_passive_mpc(task, cfg, 3);
  ASSERT_FALSE(log.records.empty());
  PhysicalState prev = log.start;
  for (const auto& r : log.records) {
    EXPECT_EQ(r.belief.mean, r.true_state);
    EXPECT_EQ(r.belief.std_x, 0.0);
    EXPECT_EQ(r.true_state, step_deterministic(prev, r.u_p, cfg.dyn));
    prev = r.true_state;
  }
  EXPECT_TRUE(log.summary.goal_reached);
}

TEST(Naive, IntervalIsFloorOfRatio) {
  EXPECT_EQ(naive_interval(arc_task(245, 20)), 12u);
  EXPECT_EQ(naive_interval(arc_task(100, 100)), 1u);
  EXPECT_EQ(naive_interval(arc_task(135, 10)), 13u);
  EXPECT_EQ(naive_interval(arc_task(50, 0)), 0u);
}

TEST(Naive, LocalizesOnScheduleWithinBudget) {
  const auto task = arc_task(60, 4);  // interval 15
  const auto log = run_naive_mpc(task, small_run(), 5);
  std::vector<std::size_t> steps;
  for (const auto& r : log.records) {
    EXPECT_FALSE(r.denied);
    if (r.granted) steps.push_back(r.step);
  }
  EXPECT_LE(log.summary.updates_used, task.budget);
  std::vector<std::size_t> want;
  for (std::size_t s = 15; s <= log.records.size() && want.size() < 4; s += 15) want.push_back(s);
  EXPECT_EQ(steps, want);
}

TEST(JointActions, SeventyActionsRoundTrip) {
  EXPECT_EQ(JointActionSpace::kSize, 70);
  const DynamicsParams p;
  std::set<std::pair<double, double>> controls;
  for (int i = 0; i < JointActionSpace::kSize; ++i) {
    const auto d = JointActionSpace::decode(i);
    EXPECT_EQ(JointActionSpace::encode(d), i);
    EXPECT_EQ(d.localize, i % 2);
    const auto u = JointActionSpace::control(d, p);
    EXPECT_GE(u.a, p.a_min);
    EXPECT_LE(u.a, p.a_max);
    EXPECT_GE(u.delta, p.delta_min);
    EXPECT_LE(u.delta, p.delta_max);
    controls.insert({u.a, u.delta});
  }
  EXPECT_EQ(controls.size(), 35u);
  EXPECT_THROW(JointActionSpace::decode(70), std::out_of_range);
  EXPECT_THROW(JointActionSpace::decode(-1), std::out_of_range);
}

TEST(Vanilla, MaskedWithEmptyBudget) {
  TrainConfig tc;
  QNetwork net(network_sizes(PolicyKind::kJoint, tc));
  RandomStream r(9);
  net.init_uniform(r);
  const auto task = arc_task(40, 0);
  const auto log = run_vanilla_dqn_episode(task, net, small_run(), 1);
  EXPECT_EQ(log.summary.updates_used, 0u);
  for (const auto& rec : log.records) {
    EXPECT_FALSE(rec.requested);
    EXPECT_FALSE(rec.denied);
  }
}

TEST(Runners, SameSeedSameLog) {
  const auto task = arc_task(50, 3);
  const auto a = run_naive_mpc(task, small_run(), 42, 1);
  const auto b = run_naive_mpc(task, small_run(), 42, 1);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].true_state, b.records[i].true_state);
    EXPECT_EQ(a.records[i].belief.mean, b.records[i].belief.mean);
  }
  const auto c = run_naive_mpc(task, small_run(), 43, 1);
  EXPECT_NE(a.records.back().true_state, c.records.back().true_state);
}

TEST(Runners, ShareNoiseUntilTheyDiverge) {
  // Naive first localizes at step 25; before that it must coincide with passive.
  const auto task = arc_task(50, 2);
  const auto passive = run_passive_mpc(task, small_run(), 8);
  const auto naive = run_naive_mpc(task, small_run(), 8);
  ASSERT_GE(passive.records.size(), 25u);
  ASSERT_GE(naive.records.size(), 25u);
  for (std::size_t i = 0; i < 24; ++i) {
    EXPECT_EQ(passive.records[i].true_state, naive.records[i].true_state);
    EXPECT_EQ(passive.records[i].belief.mean, naive.records[i].belief.mean);
  }
  EXPECT_TRUE(naive.records[24].granted);
}

TEST(Passive, BeliefErrorGrowsOnAverage) {
  auto cfg = small_run();
  cfg.env.max_steps = 45;
  cfg.env.divergence_distance = 100.0;
  const auto task = arc_task(150, 0);
  std::vector<double> err(45, 0.0);
  std::vector<int> count(45, 0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto log = run_passive_mpc(task, cfg, seed);
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      const auto& r = log.records[i];
      err[i] += std::hypot(r.true_state.x - r.belief.mean.x, r.true_state.y - r.belief.mean.y);
      ++count[i];
    }
  }
  auto mean_at = [&](std::size_t i) { return err[i] / count[i]; };
  ASSERT_EQ(count[44], 100);
  EXPECT_LT(mean_at(4), mean_at(14));
  EXPECT_LT(mean_at(14), mean_at(29));
  EXPECT_LT(mean_at(29), mean_at(44));
}
