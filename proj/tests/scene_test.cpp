#include <gtest/gtest.h>

#include <queue>
#include <set>

#include "fixtures.hpp"
#include "objnav/objnav.hpp"

using namespace objnav;
using objnav::testing::add_object;
using objnav::testing::default_params;
using objnav::testing::make_room;

namespace {

// Free-cell flood fill from one cell, independent of the generator's checks.
std::set<std::pair<int, int>> flood(const Scene& s, int x0, int y0) {
  std::set<std::pair<int, int>> seen{{x0, y0}};
  std::queue<std::pair<int, int>> q;
  q.push({x0, y0});
  while (!q.empty()) {
    const auto [x, y] = q.front();
    q.pop();
    const int d[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& v : d) {
      const int nx = x + v[0], ny = y + v[1];
      if (s.is_free(nx, ny) && seen.insert({nx, ny}).second) q.push({nx, ny});
    }
  }
  return seen;
}

}  // namespace

TEST(GenerateScene, DeterministicForFixedSeed) {
  const auto p = default_params();
  const auto a = generate_scene(7, p);
  const auto b = generate_scene(7, p);
  EXPECT_EQ(a, b);
  EXPECT_EQ(scene_to_json(a).dump(), scene_to_json(b).dump());
  EXPECT_NE(scene_to_json(a).dump(), scene_to_json(generate_scene(8, p)).dump());
}

TEST(GenerateScene, RhoOnePlacesTargetNextToParent) {
  auto p = default_params();
  p.rho = 1.0;
  p.n_parents = 1;
  p.n_targets = 1;
  p.n_distractors = 0;
  p.target_classes = {{"Mug", 0.15, ""}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = generate_scene(seed, p);
    const ObjectInstance* parent = nullptr;
    const ObjectInstance* target = nullptr;
    for (const auto& o : s.objects()) {
      if (o.role == Role::Parent) parent = &o;
      if (o.role == Role::Target) target = &o;
    }
    ASSERT_TRUE(parent && target);
    int best = 1000;
    for (const auto& a : parent->cells)
      for (const auto& b : target->cells) best = std::min(best, std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)));
    EXPECT_LE(best, 2) << "seed " << seed;
  }
}

TEST(GenerateScene, TargetsReachableFromEveryFreeCell) {
  auto p = default_params();
  p.n_parents = 3;
  p.n_targets = 2;
  const auto s = generate_scene(7, p);
  const auto free = s.free_cells();
  ASSERT_FALSE(free.empty());
  const auto component = flood(s, free.front().x, free.front().y);
  EXPECT_EQ(component.size(), free.size());
  for (const auto& o : s.objects()) {
    if (o.role != Role::Target) continue;
    bool touches = false;
    for (const auto& c : o.cells)
      for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
        touches |= component.count({c.x + dx, c.y + dy}) > 0;
    EXPECT_TRUE(touches) << "target " << o.object_id;
  }
}

TEST(GenerateScene, StructuralInvariantsAcrossSeeds) {
  const auto p = default_params();
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const auto s = generate_scene(seed, p);
    for (int x = 0; x < s.width(); ++x) {
      EXPECT_TRUE(s.is_wall(x, 0));
      EXPECT_TRUE(s.is_wall(x, s.height() - 1));
    }
    for (int y = 0; y < s.height(); ++y) {
      EXPECT_TRUE(s.is_wall(0, y));
      EXPECT_TRUE(s.is_wall(s.width() - 1, y));
    }
    double max_target = 0.0, min_parent = 1e9;
    for (const auto& o : s.objects()) {
      ASSERT_FALSE(o.cells.empty());
      for (const auto& c : o.cells) EXPECT_EQ(s.object_at(c.x, c.y), o.object_id);
      // 4-connected footprint
      std::set<GridCell> cells(o.cells.begin(), o.cells.end());
      std::set<GridCell> seen{o.cells.front()};
      std::vector<GridCell> stack{o.cells.front()};
      while (!stack.empty()) {
        const auto c = stack.back();
        stack.pop_back();
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const GridCell n{c.x + dx, c.y + dy};
          if (cells.count(n) && seen.insert(n).second) stack.push_back(n);
        }
      }
      EXPECT_EQ(seen.size(), cells.size());
      if (o.role == Role::Target) max_target = std::max(max_target, o.physical_height);
      if (o.role == Role::Parent) min_parent = std::min(min_parent, o.physical_height);
    }
    EXPECT_GE(min_parent, max_target);
    EXPECT_FALSE(s.classes_with_role(Role::Target).empty());
  }
}

TEST(GenerateScene, PlacementFailureWhenGridIsFull) {
  auto p = default_params();
  p.width = 8;
  p.height = 8;
  p.n_parents = 40;
  p.max_attempts = 20;
  EXPECT_THROW(generate_scene(1, p), PlacementFailure);
}

TEST(GenerateScene, RejectsInvalidParams) {
  auto p = default_params();
  p.width = 7;
  EXPECT_THROW(generate_scene(1, p), ConfigError);
  p = default_params();
  p.rho = 1.5;
  EXPECT_THROW(generate_scene(1, p), ConfigError);
  p = default_params();
  p.parent_classes = {};
  EXPECT_THROW(generate_scene(1, p), ConfigError);
  p = default_params();
  p.parent_classes[0].height = 0.05;  // shorter than a target
  EXPECT_THROW(generate_scene(1, p), ConfigError);
}

TEST(Step, MoveAheadIntoFreeCell) {
  const auto s = make_room(8, 8);
  EXPECT_EQ(step(s, {3, 3, Heading::N}, Action::MoveAhead), (AgentPose{3, 2, Heading::N}));
}

TEST(Step, MoveAheadIntoWallIsBlocked) {
  auto s = make_room(8, 8);
  s.set_wall(3, 2);
  EXPECT_EQ(step(s, {3, 3, Heading::N}, Action::MoveAhead), (AgentPose{3, 3, Heading::N}));
}

TEST(Step, MoveAheadIntoObjectIsBlocked) {
  auto s = make_room(8, 8);
  add_object(s, "Table", Role::Parent, {{4, 3}}, 0.7);
  EXPECT_EQ(step(s, {3, 3, Heading::E}, Action::MoveAhead), (AgentPose{3, 3, Heading::E}));
}

TEST(Step, RotationsAndDone) {
  const auto s = make_room(8, 8);
  EXPECT_EQ(step(s, {3, 3, Heading::N}, Action::RotateRight), (AgentPose{3, 3, Heading::E}));
  EXPECT_EQ(step(s, {3, 3, Heading::N}, Action::RotateLeft), (AgentPose{3, 3, Heading::W}));
  EXPECT_EQ(step(s, {3, 3, Heading::W}, Action::Done), (AgentPose{3, 3, Heading::W}));
}

TEST(Step, NeverLeavesFreeCells) {
  const auto s = generate_scene(3, default_params());
  for (const auto& c : s.free_cells())
    for (auto h : kHeadings)
      for (int a = 0; a < kNumActions; ++a) {
        const auto n = step(s, {c.x, c.y, h}, static_cast<Action>(a));
        ASSERT_TRUE(s.is_free(n.x, n.y));
      }
}

TEST(SceneJson, RoundTripIsLossless) {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 0xdeadbeefcafeULL}) {
    const auto s = generate_scene(seed, default_params());
    const auto text = scene_to_json(s).dump();
    const auto back = scene_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back, s);
    EXPECT_EQ(scene_to_json(back).dump(), text);
  }
}

TEST(SceneJson, RejectsInconsistentOccupancy) {
  const auto s = generate_scene(5, default_params());
  auto j = scene_to_json(s);
  auto row = j["occupancy"][1].get<std::string>();
  row[1] = 'o';
  j["occupancy"][1] = row;
  EXPECT_THROW(scene_from_json(j), DataError);
  EXPECT_THROW(scene_from_json(nlohmann::json::object()), DataError);
}
