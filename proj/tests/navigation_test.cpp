#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "objnav/objnav.hpp"
#include "oracles.hpp"

using namespace objnav;
using objnav::testing::add_object;
using objnav::testing::default_params;
using objnav::testing::make_detection;
using objnav::testing::make_room;

namespace {

// 1 m cells: facing the mug from the adjacent cell puts it 0.5 m away,
// one cell further back it is 1.5 m away.
Scene mug_room() {
  auto s = make_room(9, 9, 1.0);
  add_object(s, "Mug", Role::Target, {{4, 2}}, 0.15);
  return s;
}

}  // namespace

TEST(SuccessCheck, DepthThreshold) {
  Observation obs;
  obs.detections.push_back(make_detection(0, "Mug", Role::Target, 12, 0.5));
  EXPECT_TRUE(success_check("Mug", obs));
  obs.detections[0].mean_depth = 3.0;
  EXPECT_FALSE(success_check("Mug", obs));
  obs.detections[0].mean_depth = 1.0;
  EXPECT_TRUE(success_check("Mug", obs));  // boundary is inclusive
  EXPECT_FALSE(success_check("Apple", obs));
}

TEST(SuccessCheck, TargetBehindAgentIsNotVisible) {
  auto s = make_room(9, 9, 0.5);
  add_object(s, "Mug", Role::Target, {{4, 5}}, 0.15);
  const AgentPose p{4, 4, Heading::N};  // mug centre 0.5 m behind
  const auto obs = render(s, p, Camera{});
  EXPECT_FALSE(success_check(s, p, "Mug", obs));
  const AgentPose facing{4, 4, Heading::S};
  EXPECT_TRUE(success_check(s, facing, "Mug", render(s, facing, Camera{})));
}

TEST(ShortestPath, ZeroAtGoalAndOneBehindIt) {
  const auto s = mug_room();
  const Camera cam;
  EXPECT_EQ(shortest_path_length(s, {4, 3, Heading::N}, "Mug", cam), 0);
  EXPECT_EQ(shortest_path_length(s, {4, 4, Heading::N}, "Mug", cam), 1);
  EXPECT_EQ(shortest_path_length(s, {4, 3, Heading::E}, "Mug", cam), 1);
  EXPECT_EQ(shortest_path_length(s, {4, 3, Heading::S}, "Mug", cam), 2);
}

TEST(ShortestPath, UnreachableTargetGivesNullopt) {
  auto s = make_room(8, 8);
  for (int x = 0; x < 8; ++x) s.set_wall(x, 3);
  add_object(s, "Mug", Role::Target, {{3, 1}}, 0.15);
  const ObservationCache cache(s, Camera{});
  EXPECT_FALSE(shortest_path_length(cache, {3, 5, Heading::N}, "Mug").has_value());
  EXPECT_EQ(distance_field(cache, "Mug")[pose_index(s, {3, 5, Heading::N})], kUnreachable);
  EXPECT_FALSE(shortest_path_length(cache, {3, 5, Heading::N}, "Apple").has_value());
}

TEST(ShortestPath, MatchesIndependentDijkstra) {
  const Camera cam;
  Rng rng(77);
  for (int q = 0; q < 12; ++q) {
    const auto s = generate_scene(500 + q, default_params());
    const ObservationCache cache(s, cam);
    const auto free = s.free_cells();
    const auto c = free[uniform_index(rng, free.size())];
    const AgentPose start{c.x, c.y, kHeadings[uniform_index(rng, 4)]};
    for (const auto& target : s.classes_with_role(Role::Target))
      EXPECT_EQ(shortest_path_length(cache, start, target), oracle::dijkstra_path_length(s, start, target, cam, 1.0))
          << "scene " << q << " target " << target;
  }
}

TEST(DistanceField, AgreesWithForwardSearchEverywhere) {
  const auto s = generate_scene(31, default_params());
  const ObservationCache cache(s, Camera{});
  for (const auto& target : s.classes_with_role(Role::Target)) {
    const auto field = distance_field(cache, target);
    for (const auto& c : s.free_cells())
      for (auto h : kHeadings) {
        const AgentPose p{c.x, c.y, h};
        const auto fwd = shortest_path_length(cache, p, target);
        ASSERT_EQ(field[pose_index(s, p)], fwd.value_or(kUnreachable));
      }
  }
}

TEST(DistanceField, ZeroExactlyWhereSuccessHolds) {
  const auto s = generate_scene(32, default_params());
  const ObservationCache cache(s, Camera{});
  for (const auto& target : s.classes_with_role(Role::Target)) {
    const auto field = distance_field(cache, target);
    for (const auto& c : s.free_cells())
      for (auto h : kHeadings) {
        const AgentPose p{c.x, c.y, h};
        EXPECT_EQ(field[pose_index(s, p)] == 0, success_check(target, cache.at(p)));
      }
  }
}

TEST(DistanceField, OneOptimalActionDecreasesByExactlyOne) {
  for (std::uint64_t seed : {33u, 34u, 35u}) {
    const auto s = generate_scene(seed, default_params());
    const ObservationCache cache(s, Camera{});
    for (const auto& target : s.classes_with_role(Role::Target)) {
      const auto field = distance_field(cache, target);
      for (const auto& c : s.free_cells())
        for (auto h : kHeadings) {
          const AgentPose p{c.x, c.y, h};
          const int d = field[pose_index(s, p)];
          if (d <= 0) continue;
          int best = std::numeric_limits<int>::max();
          for (auto a : {Action::MoveAhead, Action::RotateLeft, Action::RotateRight}) {
            const int nd = field[pose_index(s, step(s, p, a))];
            ASSERT_NE(nd, kUnreachable);
            ASSERT_GE(nd, d - 1);
            best = std::min(best, nd);
          }
          ASSERT_EQ(best, d - 1);
        }
    }
  }
}

TEST(PoseIndex, RoundTrips) {
  const auto s = make_room(7, 5);
  for (std::size_t i = 0; i < pose_count(s); ++i) EXPECT_EQ(pose_index(s, pose_from_index(s, i)), i);
}
