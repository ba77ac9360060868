#pragma once

// Four-room gridworld as a contextual MDP. Cells are states
// (s = y * width + x); each context is a goal cell.
//
// Actions: 0 up (y+1), 1 down (y-1), 2 left (x-1), 3 right (x+1),
// 4 collects reward, 5.. are dummies that change nothing.

#include "rollin/rollin.hpp"
#include "rollin/tabular.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rollin::fourroom {

inline constexpr int kMoveActions = 4;
inline constexpr int kRewardAction = 4;
inline constexpr int kDummyActions = 100;
inline constexpr int kNumActions = kMoveActions + 1 + kDummyActions;

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

using Edge = std::pair<Cell, Cell>;

inline Edge normalized(Cell a, Cell b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct GridLayout {
  int width = 12;
  int height = 12;
  std::set<Edge> walls;  // blocked edges between adjacent cells
  Cell start{0, 0};
  std::vector<Cell> curriculum;

  int n_cells() const { return width * height; }
  bool contains(Cell c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }
  int index(Cell c) const { return c.y * width + c.x; }
  Cell cell(int s) const { return {s % width, s / width}; }
  bool blocked(Cell a, Cell b) const { return walls.count(normalized(a, b)) > 0; }
};

/// Cell reached by a move action, or the same cell when the move hits the
/// border or a wall. Non-move actions stay put.
inline Cell move(const GridLayout& layout, Cell c, int action) {
  static constexpr std::array<std::array<int, 2>, kMoveActions> deltas{
      {{0, 1}, {0, -1}, {-1, 0}, {1, 0}}};
  if (action < 0 || action >= kMoveActions) return c;
  const Cell next{c.x + deltas[action][0], c.y + deltas[action][1]};
  if (!layout.contains(next) || layout.blocked(c, next)) return c;
  return next;
}

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

/// Every violated layout invariant; empty when the layout is usable.
inline std::vector<std::string> layout_problems(const GridLayout& layout) {
  std::vector<std::string> problems;
  auto name = [](Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; };
  if (layout.width <= 0 || layout.height <= 0) {
    problems.emplace_back("grid dimensions must be positive");
    return problems;
  }
  for (const auto& [a, b] : layout.walls) {
    if (!layout.contains(a) || !layout.contains(b) || manhattan(a, b) != 1) {
      problems.push_back("wall " + name(a) + "-" + name(b) + " is not between adjacent cells");
    }
  }
  if (!layout.contains(layout.start)) problems.push_back("start " + name(layout.start) + " off grid");
  for (std::size_t i = 0; i < layout.curriculum.size(); ++i) {
    const Cell g = layout.curriculum[i];
    if (!layout.contains(g)) {
      problems.push_back("curriculum goal " + name(g) + " off grid");
      continue;
    }
    if (i > 0) {
      const Cell prev = layout.curriculum[i - 1];
      if (manhattan(prev, g) != 1 || layout.blocked(prev, g)) {
        problems.push_back("curriculum goals " + name(prev) + " and " + name(g) +
                           " are not one walkable move apart");
      }
    }
  }
  if (!problems.empty()) return problems;
  // Breadth-first reachability from the start cell.
  std::vector<bool> seen(static_cast<std::size_t>(layout.n_cells()), false);
  std::queue<Cell> frontier;
  frontier.push(layout.start);
  seen[static_cast<std::size_t>(layout.index(layout.start))] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop();
    for (int a = 0; a < kMoveActions; ++a) {
      const auto n_index = static_cast<std::size_t>(layout.index(move(layout, c, a)));
      if (!seen[n_index]) {
        seen[n_index] = true;
        ++reached;
        frontier.push(layout.cell(static_cast<int>(n_index)));
      }
    }
  }
  if (reached != layout.n_cells()) {
    problems.push_back("only " + std::to_string(reached) + " of " +
                       std::to_string(layout.n_cells()) + " cells reachable from the start");
  }
  return problems;
}

inline void require_valid(const GridLayout& layout) {
  const auto problems = layout_problems(layout);
  if (!problems.empty()) {
    std::string msg = "invalid layout:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
}

// {"width", "height", "walls": [[[x1,y1],[x2,y2]], ...], "curriculum": [[x,y], ...]}
// plus an optional "start": [x, y] (default (0,0)).
inline GridLayout layout_from_json(const nlohmann::json& doc) {
  auto cell = [](const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("cell must be [x, y]");
    return Cell{j[0].get<int>(), j[1].get<int>()};
  };
  GridLayout layout;
  layout.width = doc.at("width").get<int>();
  layout.height = doc.at("height").get<int>();
  for (const auto& w : doc.at("walls")) {
    if (!w.is_array() || w.size() != 2) throw std::invalid_argument("wall must be [[x1,y1],[x2,y2]]");
    layout.walls.insert(normalized(cell(w[0]), cell(w[1])));
  }
  if (doc.contains("start")) layout.start = cell(doc.at("start"));
  for (const auto& g : doc.at("curriculum")) layout.curriculum.push_back(cell(g));
  return layout;
}

inline nlohmann::json layout_to_json(const GridLayout& layout) {
  auto cell = [](Cell c) { return nlohmann::json::array({c.x, c.y}); };
  nlohmann::json walls = nlohmann::json::array();
  for (const auto& [a, b] : layout.walls) walls.push_back({cell(a), cell(b)});
  nlohmann::json curriculum = nlohmann::json::array();
  for (Cell g : layout.curriculum) curriculum.push_back(cell(g));
  return {{"width", layout.width},
          {"height", layout.height},
          {"start", cell(layout.start)},
          {"walls", std::move(walls)},
          {"curriculum", std::move(curriculum)}};
}

inline GridLayout load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open layout file " + path);
  GridLayout layout = layout_from_json(nlohmann::json::parse(in));
  require_valid(layout);
  return layout;
}

/// Bundled layout: a 12x12 grid split by walls on both midlines, with one
/// doorway in each of the four wall segments, and a 17-goal path from (0,0)
/// to (8,8) through two of the doorways.
inline GridLayout default_layout() {
  GridLayout layout;
  for (int y = 0; y < 12; ++y) {
    if (y == 2 || y == 9) continue;  // doorways in the vertical wall
    layout.walls.insert(normalized({5, y}, {6, y}));
  }
  for (int x = 0; x < 12; ++x) {
    if (x == 2 || x == 8) continue;  // doorways in the horizontal wall
    layout.walls.insert(normalized({x, 5}, {x, 6}));
  }
  layout.curriculum = {{0, 0}, {0, 1}, {0, 2}, {1, 2}, {2, 2}, {3, 2}, {4, 2}, {5, 2}, {6, 2},
                       {7, 2}, {8, 2}, {8, 3}, {8, 4}, {8, 5}, {8, 6}, {8, 7}, {8, 8}};
  return layout;
}

#ifdef ROLLIN_DATA_DIR
inline std::string default_layout_path() { return std::string(ROLLIN_DATA_DIR) + "/fourroom_default.json"; }
#endif

/// Transition kernel over n_cells states and kNumActions actions; every row
/// is one-hot.
inline TransitionModel build_dynamics(const GridLayout& layout) {
  require_valid(layout);
  const int S = layout.n_cells();
  std::vector<int> next(static_cast<std::size_t>(S) * kNumActions);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < kNumActions; ++a) {
      next[static_cast<std::size_t>(s) * kNumActions + a] = layout.index(move(layout, layout.cell(s), a));
    }
  }
  return TransitionModel::deterministic(S, kNumActions, next);
}

enum class RewardVariant { easy, hard };

struct RewardParams {
  double decay;   // reward at distance D is decay^D
  int threshold;  // zero reward beyond this distance
};

inline RewardParams reward_params(RewardVariant variant) {
  return variant == RewardVariant::easy ? RewardParams{0.9, 5} : RewardParams{0.5, 4};
}

inline RewardVariant parse_variant(const std::string& name) {
  if (name == "easy") return RewardVariant::easy;
  if (name == "hard") return RewardVariant::hard;
  throw std::invalid_argument("reward variant must be easy or hard, got " + name);
}

inline std::string to_string(RewardVariant v) { return v == RewardVariant::easy ? "easy" : "hard"; }

struct GoalContext {
  Cell goal;
  RewardVariant variant = RewardVariant::hard;
};

/// Reward of action a at cell c: decay^D for the reward action when the
/// wall-free Manhattan distance D to the goal is within the threshold.
inline double reward_value(const GoalContext& ctx, Cell c, int action) {
  if (action != kRewardAction) return 0.0;
  const auto params = reward_params(ctx.variant);
  const int d = manhattan(c, ctx.goal);
  return d <= params.threshold ? std::pow(params.decay, d) : 0.0;
}

inline Table reward_table(const GridLayout& layout, const GoalContext& ctx) {
  Table r = Table::Zero(layout.n_cells(), kNumActions);
  for (int s = 0; s < layout.n_cells(); ++s) r(s, kRewardAction) = reward_value(ctx, layout.cell(s), kRewardAction);
  return r;
}

inline std::vector<GoalContext> curriculum_goals(const GridLayout& layout, RewardVariant variant) {
  std::vector<GoalContext> out;
  for (Cell g : layout.curriculum) out.push_back({g, variant});
  return out;
}

/// The 17-goal curriculum of the bundled layout.
inline std::vector<GoalContext> default_curriculum(RewardVariant variant = RewardVariant::hard) {
  return curriculum_goals(default_layout(), variant);
}

enum class InitMode {
  training,  // point mass at the start cell
  theory,    // uniform over cells
};

/// Shared dynamics plus one reward table per goal cell (context id = cell
/// index).
inline ContextualMdp build_contextual(const GridLayout& layout, RewardVariant variant,
                                     InitMode init = InitMode::training, double discount = 0.99) {
  ContextualMdp cmdp;
  cmdp.transition = std::make_shared<const TransitionModel>(build_dynamics(layout));
  cmdp.discount = discount;
  for (int s = 0; s < layout.n_cells(); ++s) {
    cmdp.rewards.push_back(reward_table(layout, {layout.cell(s), variant}));
  }
  if (init == InitMode::training) {
    cmdp.init_dist = Vector::Zero(layout.n_cells());
    cmdp.init_dist(layout.index(layout.start)) = 1.0;
  } else {
    cmdp.init_dist = Vector::Constant(layout.n_cells(), 1.0 / layout.n_cells());
  }
  return cmdp;
}

/// Curriculum over goal-cell context ids.
inline Curriculum make_curriculum(const GridLayout& layout, double beta, double threshold = 0.5) {
  Curriculum c;
  for (Cell g : layout.curriculum) c.contexts.push_back(layout.index(g));
  c.beta = beta;
  c.switch_rule = {SwitchRuleKind::success_rate, threshold};
  return c;
}

inline nlohmann::json curriculum_json(const GridLayout& layout, const Curriculum& curriculum) {
  return curriculum_to_json(curriculum, [&](int id) {
    const Cell c = layout.cell(id);
    return nlohmann::json::array({c.x, c.y});
  });
}

}  // namespace rollin::fourroom
