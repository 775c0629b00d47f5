#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "comtraq/task_gen.hpp"
#include "comtraq/trajectory.hpp"

using namespace comtraq;

TEST(Budget, ProportionalToLength) {
  EXPECT_EQ(budget_for(135, 0.074), 10u);
  EXPECT_EQ(budget_for(245, 0.0816), 20u);
  EXPECT_EQ(budget_for(100, 0.0), 0u);
}

TEST(SampleTask, OutputsSatisfyTrajectoryInvariants) {
  const TaskGenConfig gen;
  const DynamicsParams dyn;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    RandomStream r(seed);
    const auto task = sample_task(gen, dyn, r);
    EXPECT_NO_THROW(task.validate());
    const auto& w = task.trajectory.waypoints;
    EXPECT_GE(w.size(), gen.min_waypoints);
    EXPECT_LE(w.size(), gen.max_waypoints);
    for (std::size_t i = 1; i < w.size(); ++i) EXPECT_LE(distance(w[i - 1], w[i]), kMaxWaypointSpacing);
    EXPECT_FALSE(self_intersects(w));
    EXPECT_GE(min_turn_radius(w), bicycle_min_radius(dyn));
    const double rho = double(task.budget) / double(w.size());
    EXPECT_GE(rho, gen.rho_min - 0.5 / double(w.size()));
    EXPECT_LE(rho, gen.rho_max + 0.5 / double(w.size()));
  }
}

TEST(SampleTask, SameSeedSameTask) {
  const TaskGenConfig gen;
  const DynamicsParams dyn;
  RandomStream a(5), b(5);
  const auto ta = sample_task(gen, dyn, a);
  const auto tb = sample_task(gen, dyn, b);
  EXPECT_EQ(ta.trajectory.waypoints, tb.trajectory.waypoints);
  EXPECT_EQ(ta.budget, tb.budget);
  const auto sa = sample_task_suite(4, gen, dyn, 9);
  const auto sb = sample_task_suite(4, gen, dyn, 9);
  ASSERT_EQ(sa.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(sa[i].trajectory.waypoints, sb[i].trajectory.waypoints);
}

TEST(SampleTask, FailsLoudlyWhenInfeasible) {
  TaskGenConfig gen;
  gen.workspace = 0.5;  // far too small to reach 60 waypoints
  gen.max_attempts = 5;
  RandomStream r(1);
  EXPECT_THROW(sample_task(gen, DynamicsParams{}, r), std::runtime_error);
}

TEST(Resample, ArcLengthSpacing) {
  const std::vector<Point2> poly{{0, 0}, {1.0, 0}, {1.0, 1.0}};
  const auto w = resample_by_arc_length(poly, 0.1);
  ASSERT_EQ(w.size(), 21u);
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_NEAR(distance(w[i - 1], w[i]), 0.1, 1e-9);
  EXPECT_EQ(w.back(), poly.back());
}

TEST(Resample, ExactCount) {
  const std::vector<Point2> poly{{0, 0}, {3.0, 0}};
  const auto w = resample_to_count(poly, 31);
  ASSERT_EQ(w.size(), 31u);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i].x, 0.1 * double(i), 1e-12);
}

TEST(Geometry, SelfIntersectionAndTurnRadius) {
  EXPECT_TRUE(self_intersects({{0, 0}, {1, 1}, {1, 0}, {0, 1}}));
  EXPECT_FALSE(self_intersects({{0, 0}, {1, 0}, {2, 0.5}, {3, 0.5}}));
  // Points on a circle of radius 2.
  std::vector<Point2> arc;
  for (int i = 0; i < 10; ++i) arc.push_back({2 * std::cos(0.1 * i), 2 * std::sin(0.1 * i)});
  EXPECT_NEAR(min_turn_radius(arc), 2.0, 1e-9);
  EXPECT_NEAR(bicycle_min_radius(DynamicsParams{}), 0.16 / std::tan(std::numbers::pi / 3), 1e-15);
}

TEST(Spline, InterpolatesControlPoints) {
  const std::vector<Point2> ctrl{{0, 0}, {1, 2}, {3, 1}, {4, 4}};
  const auto dense = spline_through(ctrl, 50);
  for (const auto& c : ctrl) {
    double best = 1e9;
    for (const auto& p : dense) best = std::min(best, distance(p, c));
    EXPECT_LT(best, 1e-9);
  }
}

TEST(Scenarios, SizesAndBudgets) {
  const auto s1 = builtin_scenario("s1-like");
  EXPECT_EQ(s1.trajectory.size(), 135u);
  EXPECT_EQ(s1.budget, 10u);
  const auto s2 = builtin_scenario("s2-like");
  EXPECT_EQ(s2.trajectory.size(), 245u);
  EXPECT_EQ(s2.budget, 20u);
  EXPECT_NO_THROW(s2.validate());
  EXPECT_GE(min_turn_radius(s2.trajectory.waypoints), bicycle_min_radius(DynamicsParams{}));
  EXPECT_THROW(builtin_scenario("s3"), std::invalid_argument);
}

TEST(TrajectoryCsv, RoundTripIsExact) {
  RandomStream r(3);
  const auto task = sample_task(TaskGenConfig{}, DynamicsParams{}, r);
  std::stringstream ss;
  write_trajectory_csv(ss, task.trajectory);
  const auto back = read_trajectory_csv(ss);
  EXPECT_EQ(back.waypoints, task.trajectory.waypoints);
}

TEST(TrajectoryCsv, RejectsMalformedInput) {
  std::stringstream bad_header("a,b\n0,0\n0.1,0\n");
  EXPECT_THROW(read_trajectory_csv(bad_header), std::runtime_error);
  std::stringstream bad_value("x,y\n0,0\nfoo,0\n");
  EXPECT_THROW(read_trajectory_csv(bad_value), std::runtime_error);
  std::stringstream too_sparse("x,y\n0,0\n1,0\n");
  EXPECT_ANY_THROW(read_trajectory_csv(too_sparse));
  std::stringstream one_point("x,y\n0,0\n");
  EXPECT_ANY_THROW(read_trajectory_csv(one_point));
}
