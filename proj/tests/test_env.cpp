#include <cmath>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "comtraq/env.hpp"

using namespace comtraq;

namespace {

TaskSpec line_task(std::size_t n, std::size_t budget) {
  TaskSpec t;
  for (std::size_t i = 0; i < n; ++i) t.trajectory.waypoints.push_back({0.1 * double(i), 0.05 * double(i)});
  t.budget = budget;
  return t;
}

EnvConfig small_cfg() {
  EnvConfig c;
  c.particles = 50;
  return c;
}

}  // namespace

TEST(Reset, KnownStartFullBudget) {
  const auto task = line_task(30, 4);
  const auto env = reset(task, small_cfg());
  const auto b = summarize(env.belief);
  EXPECT_EQ(b.std_x, 0.0);
  EXPECT_EQ(b.std_y, 0.0);
  EXPECT_EQ(b.std_v, 0.0);
  EXPECT_EQ(b.std_psi, 0.0);
  EXPECT_EQ(env.remaining, 4u);
  EXPECT_EQ(env.budget, 4u);
  EXPECT_EQ(env.true_state.v, 0.0);
  EXPECT_DOUBLE_EQ(env.true_state.psi, std::atan2(0.05, 0.1));
  EXPECT_EQ(env.belief.size(), 50u);
  EXPECT_FALSE(env.done);
}

TEST(Observe, ExactIffActive) {
  RandomStream r(1);
  for (int i = 0; i < 1000; ++i) {
    const PhysicalState s{r.uniform(-5, 5), r.uniform(-5, 5), r.uniform(0, 0.5), r.uniform(-3, 3)};
    const auto on = observe(s, 1);
    ASSERT_TRUE(on.has_value());
    EXPECT_EQ(*on, s);
    EXPECT_FALSE(observe(s, 0).has_value());
    EXPECT_EQ(summarize(collapse_to(init_delta({}, 10), *on)).mean, s);
  }
}

TEST(ComputeReward, Cases) {
  EnvConfig c;
  EXPECT_EQ(compute_reward(-2.0, 0.5, true, c), c.r_min);
  EXPECT_DOUBLE_EQ(compute_reward(-2.0, 0.5, false, c), -2.25);
  c.alpha = 1.0;
  EXPECT_EQ(compute_reward(-2.0, 123.0, false, c), -2.0);
}

TEST(Step, BudgetDecrementsOnGrantedUpdate) {
  auto task = line_task(30, 3);
  const auto cfg = small_cfg();
  const DynamicsParams dyn;
  auto env = reset(task, cfg);
  auto rng = EnvStreams::from_seed(1, 0);
  const auto out = step(env, {0.1, 0.0}, 1, 0.5, task, cfg, dyn, rng);
  EXPECT_EQ(env.remaining, 2u);
  EXPECT_TRUE(out.info.granted);
  ASSERT_TRUE(out.observation.has_value());
  EXPECT_EQ(*out.observation, env.true_state);
  const auto b = summarize(env.belief);
  EXPECT_EQ(b.mean, env.true_state);
  EXPECT_EQ(b.std_x, 0.0);
  EXPECT_EQ(b.std_psi, 0.0);
}

TEST(Step, ViolationDeniedPenalizedAndContinues) {
  auto task = line_task(30, 0);
  const auto cfg = small_cfg();
  const DynamicsParams dyn;
  auto env = reset(task, cfg);
  auto rng = EnvStreams::from_seed(2, 0);
  const auto out = step(env, {0.1, 0.0}, 1, 0.5, task, cfg, dyn, rng);
  EXPECT_EQ(env.remaining, 0u);
  EXPECT_TRUE(out.info.violated);
  EXPECT_FALSE(out.info.granted);
  EXPECT_FALSE(out.observation.has_value());
  EXPECT_EQ(out.r_dqn, cfg.r_min);
  EXPECT_FALSE(out.done);
}

TEST(Step, RewardsFollowWeighting) {
  auto task = line_task(30, 2);
  auto cfg = small_cfg();
  cfg.training_mode = true;
  const DynamicsParams dyn;
  auto env = reset(task, cfg);
  auto rng = EnvStreams::from_seed(3, 0);
  for (int k = 0; k < 10; ++k) {
    const auto out = step(env, {0.2, 0.1}, 0, 1.5, task, cfg, dyn, rng);
    EXPECT_DOUBLE_EQ(out.r_mpc, -cfg.alpha * 1.5);
    const auto m = summarize(env.belief).mean;
    const double dev = std::hypot(env.true_state.x - m.x, env.true_state.y - m.y);
    EXPECT_NEAR(out.r_deviation, (1 - cfg.alpha) * dev, 1e-15);
    EXPECT_NEAR(out.r_dqn, out.r_mpc - (1 - cfg.alpha) * dev, 1e-12);
    EXPECT_LE(out.r_mpc, 0.0);
  }
}

TEST(Step, NoDeviationOutsideTraining) {
  auto task = line_task(30, 2);
  const auto cfg = small_cfg();
  const DynamicsParams dyn;
  auto env = reset(task, cfg);
  auto rng = EnvStreams::from_seed(4, 0);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(step(env, {0.2, 0.1}, 0, 1.0, task, cfg, dyn, rng).r_deviation, 0.0);
}

TEST(Step, RejectsFinishedEpisodeAndBadArgs) {
  auto task = line_task(30, 2);
  auto cfg = small_cfg();
  cfg.max_steps = 1;
  const DynamicsParams dyn;
  auto env = reset(task, cfg);
  auto rng = EnvStreams::from_seed(5, 0);
  EXPECT_THROW(step(env, {}, 2, 0.0, task, cfg, dyn, rng), std::invalid_argument);
  EXPECT_THROW(step(env, {}, 0, -1.0, task, cfg, dyn, rng), std::invalid_argument);
  const auto out = step(env, {}, 0, 0.0, task, cfg, dyn, rng);
  EXPECT_TRUE(out.done);
  EXPECT_EQ(env.termination, Termination::kMaxSteps);
  EXPECT_THROW(step(env, {}, 0, 0.0, task, cfg, dyn, rng), std::logic_error);
}

TEST(Step, BudgetInvariantsUnderRandomRequests) {
  const DynamicsParams dyn;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomStream r(seed);
    auto task = line_task(40, static_cast<std::size_t>(r.uniform_int(0, 6)));
    const auto cfg = small_cfg();
    auto env = reset(task, cfg);
    auto rng = EnvStreams::from_seed(seed, 0);
    std::size_t granted = 0, prev = env.remaining;
    while (!env.done) {
      const int ul = r.uniform() < 0.3 ? 1 : 0;
      const auto out = step(env, {r.uniform(-0.2, 0.2), r.uniform(-0.5, 0.5)}, ul, 0.1, task, cfg, dyn, rng);
      granted += out.info.granted ? 1 : 0;
      ASSERT_LE(env.remaining, task.budget);
      ASSERT_LE(env.remaining, prev);
      ASSERT_EQ(prev - env.remaining, out.info.granted ? 1u : 0u);
      ASSERT_EQ(out.observation.has_value(), out.info.granted);
      ASSERT_EQ(out.r_dqn == cfg.r_min, out.info.violated);
      prev = env.remaining;
    }
    EXPECT_EQ(granted + env.remaining, task.budget);
  }
}

TEST(Step, ProgressNeverRegresses) {
  const DynamicsParams dyn;
  auto task = line_task(60, 3);
  const auto cfg = small_cfg();
  auto env = reset(task, cfg);
  auto rng = EnvStreams::from_seed(6, 0);
  RandomStream r(6);
  std::size_t prev = 0;
  while (!env.done) {
    step(env, {r.uniform(-0.2, 0.2), r.uniform(-1, 1)}, r.uniform() < 0.1, 0.0, task, cfg, dyn, rng);
    ASSERT_GE(env.progress, prev);
    prev = env.progress;
  }
}

TEST(Step, GoalTerminationWhenBeliefArrives) {
  DynamicsParams dyn;
  dyn.slip_sigma = 0.0;
  auto task = line_task(5, 0);
  auto cfg = small_cfg();
  cfg.max_steps = 100;
  auto env = reset(task, cfg);
  auto rng = EnvStreams::from_seed(7, 0);
  // Drive straight along the line at the speed limit: the goal is 0.447 m away.
  std::size_t n = 0;
  while (!env.done && n < 100) {
    step(env, {0.2, 0.0}, 0, 0.0, task, cfg, dyn, rng);
    ++n;
  }
  EXPECT_EQ(env.termination, Termination::kGoal);
  EXPECT_LE(distance({env.true_state.x, env.true_state.y}, task.trajectory.goal()), cfg.goal_radius);
}

TEST(Step, DivergenceTermination) {
  DynamicsParams dyn;
  dyn.slip_sigma = 0.0;
  auto task = line_task(5, 0);
  auto cfg = small_cfg();
  cfg.divergence_distance = 0.3;
  cfg.max_steps = 1000;
  auto env = reset(task, cfg);
  env.true_state.psi = -2.5;  // heading away from the path
  env.belief = init_delta(env.true_state, cfg.particles);
  auto rng = EnvStreams::from_seed(8, 0);
  while (!env.done) step(env, {0.2, 0.0}, 0, 0.0, task, cfg, dyn, rng);
  EXPECT_EQ(env.termination, Termination::kDiverged);
}

TEST(EnvConfig, Validation) {
  EnvConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.goal_radius = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.particles = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
