#include "rollin/fourroom.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <queue>

using namespace rollin;
using namespace rollin::fourroom;

TEST(Layout, BundledFileMatchesBuiltIn) {
  const auto file = load_layout(default_layout_path());
  const auto built = default_layout();
  EXPECT_EQ(file.walls, built.walls);
  EXPECT_EQ(file.curriculum, built.curriculum);
  EXPECT_EQ(file.start, built.start);
  EXPECT_EQ(file.width, 12);
  EXPECT_EQ(file.height, 12);
}

TEST(Layout, RejectsBrokenCurriculumAndUnreachableCells) {
  auto layout = default_layout();
  layout.curriculum.push_back({10, 10});
  EXPECT_THROW(require_valid(layout), std::invalid_argument);
  auto sealed = default_layout();
  sealed.walls.insert(normalized({5, 2}, {6, 2}));
  sealed.walls.insert(normalized({5, 9}, {6, 9}));
  sealed.walls.insert(normalized({8, 5}, {8, 6}));
  sealed.walls.insert(normalized({2, 5}, {2, 6}));
  sealed.curriculum = {sealed.start};  // keep the curriculum walkable so reachability is reached
  const auto problems = layout_problems(sealed);
  ASSERT_FALSE(problems.empty());
  EXPECT_NE(problems.back().find("reachable"), std::string::npos);
}

TEST(Layout, JsonRoundTrip) {
  const auto layout = default_layout();
  const auto back = layout_from_json(layout_to_json(layout));
  EXPECT_EQ(back.walls, layout.walls);
  EXPECT_EQ(back.curriculum, layout.curriculum);
}

TEST(Dynamics, ShapeAndOneHotRows) {
  const auto model = build_dynamics(default_layout());
  EXPECT_EQ(model.n_states(), 144);
  EXPECT_EQ(model.n_actions(), 105);
  for (int s = 0; s < 144; ++s)
    for (int a = 0; a < 105; ++a) {
      const auto out = model.outcomes(s, a);
      ASSERT_EQ(out.size(), 1u);
      EXPECT_EQ(out[0].prob, 1.0);
    }
}

TEST(Dynamics, BordersWallsAndDummies) {
  const auto layout = default_layout();
  const auto model = build_dynamics(layout);
  auto next = [&](Cell c, int a) { return layout.cell(model.outcomes(layout.index(c), a)[0].next); };
  EXPECT_EQ(next({0, 0}, 1), (Cell{0, 0}));    // down off the border
  EXPECT_EQ(next({0, 0}, 2), (Cell{0, 0}));    // left off the border
  EXPECT_EQ(next({11, 11}, 0), (Cell{11, 11}));
  EXPECT_EQ(next({0, 0}, 0), (Cell{0, 1}));
  EXPECT_EQ(next({0, 0}, 3), (Cell{1, 0}));
  EXPECT_EQ(next({5, 0}, 3), (Cell{5, 0}));    // wall
  EXPECT_EQ(next({5, 2}, 3), (Cell{6, 2}));    // doorway
  for (int s = 0; s < 144; ++s)
    for (int a = 4; a < 105; ++a) EXPECT_EQ(model.outcomes(s, a)[0].next, s);
}

TEST(Dynamics, EveryCellReachable) {
  const auto layout = default_layout();
  const auto model = build_dynamics(layout);
  std::vector<bool> seen(144, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int s = q.front();
    q.pop();
    for (int a = 0; a < 4; ++a) {
      const int n = model.outcomes(s, a)[0].next;
      if (!seen[n]) {
        seen[n] = true;
        ++count;
        q.push(n);
      }
    }
  }
  EXPECT_EQ(count, 144);
}

TEST(Reward, Examples) {
  EXPECT_EQ(reward_value({{3, 3}, RewardVariant::easy}, {3, 3}, 4), 1.0);
  EXPECT_DOUBLE_EQ(reward_value({{3, 3}, RewardVariant::hard}, {3, 6}, 4), 0.125);
  EXPECT_EQ(reward_value({{0, 0}, RewardVariant::easy}, {3, 3}, 4), 0.0);
  EXPECT_EQ(reward_value({{3, 3}, RewardVariant::easy}, {3, 3}, 0), 0.0);
  EXPECT_EQ(reward_value({{3, 3}, RewardVariant::hard}, {3, 3}, 50), 0.0);
  // Walls are ignored by the distance.
  EXPECT_DOUBLE_EQ(reward_value({{5, 0}, RewardVariant::easy}, {6, 0}, 4), 0.9);
}

TEST(Reward, SupportAndRange) {
  const auto layout = default_layout();
  for (auto variant : {RewardVariant::easy, RewardVariant::hard}) {
    const int threshold = reward_params(variant).threshold;
    for (int g = 0; g < 144; ++g) {
      const Cell goal = layout.cell(g);
      const Table r = reward_table(layout, {goal, variant});
      EXPECT_GE(r.minCoeff(), 0.0);
      EXPECT_LE(r.maxCoeff(), 1.0);
      for (int s = 0; s < 144; ++s) {
        const bool inside = manhattan(layout.cell(s), goal) <= threshold;
        EXPECT_EQ(r(s, 4) > 0.0, inside);
        EXPECT_EQ(r(s, 4) == 1.0, s == g);
        for (int a = 0; a < 105; ++a)
          if (a != 4) {
            EXPECT_EQ(r(s, a), 0.0);
          }
      }
    }
  }
}

TEST(Reward, ShiftEquivariance) {
  const auto layout = default_layout();
  for (auto variant : {RewardVariant::easy, RewardVariant::hard}) {
    const Cell g{5, 5}, shifted{6, 5};
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 11; ++x) {
        EXPECT_EQ(reward_value({g, variant}, {x, y}, 4), reward_value({shifted, variant}, {x + 1, y}, 4));
      }
  }
}

TEST(Curriculum, DefaultPath) {
  const auto goals = default_curriculum();
  ASSERT_EQ(goals.size(), 17u);
  EXPECT_EQ(goals.front().goal, (Cell{0, 0}));
  EXPECT_EQ(goals.back().goal, (Cell{8, 8}));
  const auto layout = default_layout();
  for (std::size_t i = 1; i < goals.size(); ++i) {
    EXPECT_EQ(manhattan(goals[i - 1].goal, goals[i].goal), 1);
    EXPECT_FALSE(layout.blocked(goals[i - 1].goal, goals[i].goal));
  }
}

TEST(Contextual, SharedDynamics) {
  const auto layout = default_layout();
  const auto cmdp = build_contextual(layout, RewardVariant::hard);
  const auto a = cmdp.mdp(0), b = cmdp.mdp(77);
  EXPECT_EQ(a.transition.get(), b.transition.get());
  EXPECT_EQ(a.transition->checksum(), build_dynamics(layout).checksum());
}

double max_adjacent_gap(RewardVariant variant) {
  const auto layout = default_layout();
  const auto cmdp = build_contextual(layout, variant);
  const auto curriculum = make_curriculum(layout, 0.75);
  double worst = 0.0;
  for (std::size_t i = 1; i < curriculum.contexts.size(); ++i) {
    const Table& r0 = cmdp.rewards[static_cast<std::size_t>(curriculum.contexts[i - 1])];
    const Table& r1 = cmdp.rewards[static_cast<std::size_t>(curriculum.contexts[i])];
    worst = std::max(worst, (r0 - r1).cwiseAbs().maxCoeff());
  }
  return worst;
}

TEST(Contextual, AdjacentRewardGapHard) {
  EXPECT_LE(max_adjacent_gap(RewardVariant::hard), 1.0 - reward_params(RewardVariant::hard).decay);
}

// The cutoff makes the easy gap decay^threshold (a cell at distance 5 from
// one goal and 6 from the next), which exceeds 1 - decay.
TEST(Contextual, AdjacentRewardGapEasyIsSetByCutoff) {
  EXPECT_NEAR(max_adjacent_gap(RewardVariant::easy), std::pow(0.9, 5), 1e-15);
}

TEST(Contextual, InitialDistributions) {
  const auto layout = default_layout();
  const auto train = build_contextual(layout, RewardVariant::hard, InitMode::training);
  EXPECT_EQ(train.init_dist(0), 1.0);
  EXPECT_EQ(train.init_dist.sum(), 1.0);
  const auto theory = build_contextual(layout, RewardVariant::hard, InitMode::theory);
  EXPECT_NEAR(theory.init_dist(100), 1.0 / 144, 1e-15);
  EXPECT_TRUE(validate_mdp(theory.mdp(10)).ok());
}

TEST(Curriculum, ExportJson) {
  const auto layout = default_layout();
  const auto doc = curriculum_json(layout, make_curriculum(layout, 0.75, 0.5));
  ASSERT_EQ(doc["contexts"].size(), 17u);
  EXPECT_EQ(doc["contexts"][16], nlohmann::json::array({8, 8}));
  EXPECT_EQ(doc["beta"], 0.75);
  EXPECT_EQ(doc["switch_threshold"], 0.5);
}
