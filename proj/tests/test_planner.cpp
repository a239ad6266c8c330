#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <queue>
#include <random>

#include "shepherd/planner.hpp"

namespace {

using namespace shepherd;

PlannerGrid open_grid(int w, int h, double cell, Vec2 origin) {
  PlannerGrid g;
  g.origin = origin;
  g.cell = cell;
  g.width = w;
  g.height = h;
  g.blocked.assign(static_cast<std::size_t>(w * h), 0);
  return g;
}

// Plain Dijkstra with the same move set (8-connected, no corner cutting).
double dijkstra_cost(const PlannerGrid& g, std::size_t s, std::size_t t) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.cell_count(), inf);
  using E = std::pair<double, std::size_t>;
  std::priority_queue<E, std::vector<E>, std::greater<>> q;
  dist[s] = 0.0;
  q.emplace(0.0, s);
  while (!q.empty()) {
    auto [d, u] = q.top();
    q.pop();
    if (d > dist[u]) continue;
    const int ux = g.ix_of(u), uy = g.iy_of(u);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        const int nx = ux + dx, ny = uy + dy;
        if (!g.in_bounds(nx, ny) || g.blocked[g.index(nx, ny)]) continue;
        if (dx && dy && (g.blocked[g.index(ux + dx, uy)] || g.blocked[g.index(ux, uy + dy)])) continue;
        const double w = (dx && dy) ? std::sqrt(2.0) : 1.0;
        const std::size_t v = g.index(nx, ny);
        if (d + w < dist[v]) {
          dist[v] = d + w;
          q.emplace(dist[v], v);
        }
      }
    }
  }
  return dist[t];
}

TEST(BuildGrid, NoSheepNoObstacles) {
  SwarmState s({}, {0, 0});
  const SheepId none[] = {0};
  const auto g = build_grid(s, 0.1, 0.4, std::span<const SheepId>(none, 0));
  EXPECT_GT(g.cell_count(), 0u);
  EXPECT_EQ(std::count(g.blocked.begin(), g.blocked.end(), 1), 0);
}

TEST(BuildGrid, BlockedDiscMatchesBruteForce) {
  SwarmState s({{0.05, 0.05}}, {3, 3});
  const auto g = build_grid(s, 0.1, 0.4, {});
  std::size_t expected = 0;
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const bool inside = distance(g.center(i), {0.05, 0.05}) <= 0.4;
    EXPECT_EQ(g.blocked[i] != 0, inside) << i;
    expected += inside;
  }
  EXPECT_GT(expected, 40u);  // about pi * 16 cells
}

TEST(BuildGrid, ExemptSheepBlockNothing) {
  SwarmState s({{0, 0}, {1, 1}}, {3, 3});
  const SheepId ex[] = {0, 1};
  const auto g = build_grid(s, 0.1, 0.4, ex);
  EXPECT_EQ(std::count(g.blocked.begin(), g.blocked.end(), 1), 0);
}

TEST(BuildGrid, CoversAgentsWithMargin) {
  SwarmState s({{0, 0}, {2, 1}}, {-1, 3});
  const auto g = build_grid(s, 0.1, 0.4, {}, 2.0);
  EXPECT_LE(g.origin.x, -1.0 - 2.0 + 1e-12);
  EXPECT_LE(g.origin.y, 0.0 - 2.0 + 1e-12);
  EXPECT_GE(g.origin.x + g.width * g.cell, 2.0 + 2.0 - 1e-12);
  EXPECT_GE(g.origin.y + g.height * g.cell, 3.0 + 2.0 - 1e-12);
}

TEST(Plan, StraightLineInFreeSpace) {
  const auto g = open_grid(40, 40, 0.1, {-2.05, -2.05});
  const auto path = plan(g, {0, 0}, {1, 0});
  EXPECT_DOUBLE_EQ(path.cost, 10.0);
  EXPECT_EQ(path.waypoints.size(), 11u);
  for (const Vec2& w : path.waypoints) EXPECT_NEAR(w.y, 0.0, 1e-12);
}

TEST(Plan, DetoursAroundObstacleOptimally) {
  SwarmState s({{0.5, 0.0}}, {0, 0});
  auto g = build_grid(s, 0.1, 0.25, {}, 2.0);
  const Vec2 a{-0.5, 0.0}, b{1.5, 0.0};
  const auto path = plan(g, a, b);
  const double free_cost = dijkstra_cost(open_grid(g.width, g.height, g.cell, g.origin), g.cell_of(a), g.cell_of(b));
  EXPECT_GT(path.cost, free_cost);
  EXPECT_NEAR(path.cost, dijkstra_cost(g, g.cell_of(a), g.cell_of(b)), 1e-9);
  for (std::size_t c : path.cells) EXPECT_FALSE(g.is_blocked(c));
}

TEST(Plan, BlockedGoalUsesNearestFreeCell) {
  SwarmState s({{0.0, 0.0}}, {-1.5, 0.0});
  const auto g = build_grid(s, 0.1, 0.4, {}, 2.0);
  const Vec2 goal{0.05, 0.02};
  const auto path = plan(g, {-1.5, 0.0}, goal);
  EXPECT_TRUE(path.goal_substituted);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.cell_count(); ++i)
    if (!g.blocked[i]) best = std::min(best, distance(g.center(i), goal));
  EXPECT_NEAR(distance(path.waypoints.back(), goal), best, 1e-12);
}

TEST(Plan, WallWithoutGapIsUnreachable) {
  auto g = open_grid(10, 10, 1.0, {0, 0});
  for (int y = 0; y < 10; ++y) g.blocked[g.index(5, y)] = 1;
  EXPECT_THROW(plan(g, {1.5, 1.5}, {8.5, 8.5}), UnreachableError);
}

TEST(Plan, ConsecutiveWaypointsAreAdjacent) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto g = open_grid(30, 30, 1.0, {0, 0});
  for (auto& b : g.blocked) b = u(rng) < 0.25;
  g.blocked[g.index(0, 0)] = 0;
  g.blocked[g.index(29, 29)] = 0;
  try {
    const auto p = plan(g, {0.5, 0.5}, {29.5, 29.5});
    for (std::size_t i = 1; i < p.cells.size(); ++i) {
      EXPECT_LE(std::abs(g.ix_of(p.cells[i]) - g.ix_of(p.cells[i - 1])), 1);
      EXPECT_LE(std::abs(g.iy_of(p.cells[i]) - g.iy_of(p.cells[i - 1])), 1);
      EXPECT_FALSE(g.is_blocked(p.cells[i]));
    }
  } catch (const UnreachableError&) {
  }
}

TEST(Plan, AStarCostEqualsDijkstraOnRandomGrids) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> side(2, 64);
  int compared = 0;
  for (int trial = 0; trial < 150; ++trial) {
    auto g = open_grid(side(rng), side(rng), 1.0, {0, 0});
    const double density = 0.35 * u(rng);
    for (auto& b : g.blocked) b = u(rng) < density;
    std::uniform_int_distribution<std::size_t> cell(0, g.cell_count() - 1);
    const std::size_t s = cell(rng), t = cell(rng);
    g.blocked[s] = g.blocked[t] = 0;
    const double ref = dijkstra_cost(g, s, t);
    if (std::isinf(ref)) {
      EXPECT_THROW(plan(g, g.center(s), g.center(t)), UnreachableError);
      continue;
    }
    EXPECT_NEAR(plan(g, g.center(s), g.center(t)).cost, ref, 1e-9);
    ++compared;
  }
  EXPECT_GT(compared, 100);
}

TEST(AdvanceAlong, StraightSegment) {
  PlannedPath p;
  p.waypoints = {{0, 0}, {2, 0}};
  const Vec2 r = advance_along(p, {0, 0}, 0.5);
  EXPECT_NEAR(r.x, 0.5, 1e-15);
  EXPECT_NEAR(r.y, 0.0, 1e-15);
}

TEST(AdvanceAlong, ClampsAtGoal) {
  PlannedPath p;
  p.waypoints = {{0, 0}, {0.2, 0}};
  EXPECT_EQ(advance_along(p, {0, 0}, 0.5), Vec2(0.2, 0));
}

TEST(AdvanceAlong, CarriesResidualAcrossCorner) {
  PlannedPath p;
  p.waypoints = {{0, 0}, {0.3, 0}, {0.3, 1.0}};
  const Vec2 r = advance_along(p, {0, 0}, 0.5);
  EXPECT_NEAR(r.x, 0.3, 1e-15);
  EXPECT_NEAR(r.y, 0.2, 1e-15);
}

TEST(AdvanceAlong, StartsFromProjectionOfY) {
  PlannedPath p;
  p.waypoints = {{0, 0}, {2, 0}};
  const Vec2 r = advance_along(p, {1.0, 0.0}, 0.5);
  EXPECT_NEAR(r.x, 1.5, 1e-15);
}

TEST(AdvanceAlong, NeverMovesMoreThanVbar) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-3.0, 3.0), v(0.01, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    PlannedPath p;
    const int n = 1 + trial % 7;
    for (int i = 0; i < n; ++i) p.waypoints.push_back({u(rng), u(rng)});
    const Vec2 y{u(rng), u(rng)};
    const double vb = v(rng);
    EXPECT_LE(distance(advance_along(p, y, vb), y), vb + 1e-12);
  }
}

TEST(AdvanceAlong, EmptyPathThrows) {
  EXPECT_THROW(advance_along(PlannedPath{}, {0, 0}, 0.5), std::invalid_argument);
}

}  // namespace
