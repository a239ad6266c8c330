#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "shepherd/swarm.hpp"
#include "shepherd/vec2.hpp"

namespace shepherd {

class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlannerConfig {
  double cell{0.1};
  double r_avoid{0.4};
};

// Uniform occupancy grid. Cell (ix, iy) has index iy * width + ix and center
// origin + ((ix + 0.5) * cell, (iy + 0.5) * cell).
struct PlannerGrid {
  Vec2 origin;
  double cell{0.1};
  int width{0};
  int height{0};
  std::vector<std::uint8_t> blocked;

  std::size_t cell_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) + static_cast<std::size_t>(ix);
  }
  int ix_of(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(width)); }
  int iy_of(std::size_t idx) const { return static_cast<int>(idx / static_cast<std::size_t>(width)); }
  bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width && iy < height; }
  bool is_blocked(std::size_t idx) const { return blocked[idx] != 0; }

  Vec2 center(std::size_t idx) const {
    return origin + Vec2{(ix_of(idx) + 0.5) * cell, (iy_of(idx) + 0.5) * cell};
  }

  // Cell containing p, or the nearest boundary cell when p lies outside.
  std::size_t cell_of(const Vec2& p) const {
    const int ix = std::clamp(static_cast<int>(std::floor((p.x - origin.x) / cell)), 0, width - 1);
    const int iy = std::clamp(static_cast<int>(std::floor((p.y - origin.y) / cell)), 0, height - 1);
    return index(ix, iy);
  }

  // Free cell whose center is nearest to p; ties go to the lower index.
  std::size_t nearest_free(const Vec2& p) const {
    std::size_t best = cell_count();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cell_count(); ++i) {
      if (blocked[i]) continue;
      const double d = norm_sq(center(i) - p);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best == cell_count()) throw UnreachableError("planner grid has no free cells");
    return best;
  }
};

struct PlannedPath {
  std::vector<Vec2> waypoints;
  std::vector<std::size_t> cells;
  double cost{0.0};  // in cell units: 1 per axial move, sqrt(2) per diagonal
  bool goal_substituted{false};
};

// Covers the bounding box of all sheep, the shepherd, and any extra points,
// padded by margin. Sheep listed in exempt never block.
inline PlannerGrid build_grid(const SwarmState& state, double cell, double r_avoid,
                              std::span<const SheepId> exempt, double margin = 2.0,
                              std::span<const Vec2> extra = {}) {
  if (!(cell > 0.0)) throw std::invalid_argument("grid cell must be positive");
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi = -lo;
  const auto grow = [&](const Vec2& p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  };
  for (const Vec2& p : state.positions) grow(p);
  grow(state.shepherd);
  for (const Vec2& p : extra) grow(p);

  PlannerGrid g;
  g.cell = cell;
  g.origin = lo - Vec2{margin, margin};
  g.width = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x + 2.0 * margin) / cell)));
  g.height = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y + 2.0 * margin) / cell)));
  g.blocked.assign(g.cell_count(), 0);

  const auto is_exempt = [&](SheepId i) {
    return std::find(exempt.begin(), exempt.end(), i) != exempt.end();
  };
  for (SheepId i = 0; i < state.size(); ++i) {
    if (is_exempt(i)) continue;
    const Vec2 p = state.positions[i];
    const int x0 = std::max(0, static_cast<int>(std::floor((p.x - r_avoid - g.origin.x) / cell)) - 1);
    const int x1 = std::min(g.width - 1, static_cast<int>(std::floor((p.x + r_avoid - g.origin.x) / cell)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor((p.y - r_avoid - g.origin.y) / cell)) - 1);
    const int y1 = std::min(g.height - 1, static_cast<int>(std::floor((p.y + r_avoid - g.origin.y) / cell)) + 1);
    for (int iy = y0; iy <= y1; ++iy) {
      for (int ix = x0; ix <= x1; ++ix) {
        const std::size_t idx = g.index(ix, iy);
        if (distance(g.center(idx), p) <= r_avoid) g.blocked[idx] = 1;
      }
    }
  }
  return g;
}

namespace detail {

inline constexpr double kSqrt2 = 1.4142135623730951;

inline double octile(int dx, int dy) {
  dx = std::abs(dx);
  dy = std::abs(dy);
  return static_cast<double>(std::max(dx, dy) - std::min(dx, dy)) + kSqrt2 * std::min(dx, dy);
}

// Calls fn(neighbor_index, step_cost) for every legal 8-connected move.
// Diagonal moves may not cut a blocked corner.
template <class Fn>
void for_each_move(const PlannerGrid& g, std::size_t idx, Fn&& fn) {
  const int ix = g.ix_of(idx);
  const int iy = g.iy_of(idx);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = ix + dx;
      const int ny = iy + dy;
      if (!g.in_bounds(nx, ny) || g.is_blocked(g.index(nx, ny))) continue;
      if (dx != 0 && dy != 0 &&
          (g.is_blocked(g.index(ix + dx, iy)) || g.is_blocked(g.index(ix, iy + dy)))) {
        continue;
      }
      fn(g.index(nx, ny), (dx != 0 && dy != 0) ? kSqrt2 : 1.0);
    }
  }
}

}  // namespace detail

// A* over the 8-connected grid with the octile heuristic. Blocked start or
// goal cells are replaced by the nearest free cell.
inline PlannedPath plan(const PlannerGrid& grid, const Vec2& start, const Vec2& goal) {
  if (grid.cell_count() == 0) throw UnreachableError("empty planner grid");
  std::size_t s = grid.cell_of(start);
  if (grid.is_blocked(s) || distance(grid.center(s), start) > grid.cell) s = grid.nearest_free(start);
  std::size_t t = grid.cell_of(goal);
  PlannedPath path;
  if (grid.is_blocked(t)) {
    t = grid.nearest_free(goal);
    path.goal_substituted = true;
  }

  const int gx = grid.ix_of(t);
  const int gy = grid.iy_of(t);
  const auto h = [&](std::size_t i) { return detail::octile(grid.ix_of(i) - gx, grid.iy_of(i) - gy); };

  const std::size_t n = grid.cell_count();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g_cost(n, inf);
  std::vector<std::size_t> parent(n, n);
  std::vector<char> closed(n, 0);

  using Entry = std::tuple<double, double, std::size_t>;  // (f, h, index)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g_cost[s] = 0.0;
  open.emplace(h(s), h(s), s);
  while (!open.empty()) {
    const auto [f, hv, u] = open.top();
    open.pop();
    if (closed[u]) continue;
    closed[u] = 1;
    if (u == t) break;
    detail::for_each_move(grid, u, [&](std::size_t v, double w) {
      if (closed[v]) return;
      const double cand = g_cost[u] + w;
      if (cand < g_cost[v]) {
        g_cost[v] = cand;
        parent[v] = u;
        const double hv2 = h(v);
        open.emplace(cand + hv2, hv2, v);
      }
    });
  }
  if (!closed[t]) throw UnreachableError("no path to goal");

  for (std::size_t c = t; c != n; c = parent[c]) path.cells.push_back(c);
  std::reverse(path.cells.begin(), path.cells.end());
  path.waypoints.reserve(path.cells.size());
  for (std::size_t c : path.cells) path.waypoints.push_back(grid.center(c));
  path.cost = g_cost[t];
  return path;
}

// Moves from y along the polyline by a total travel of v_bar. If y is off the
// polyline, the hop onto its closest point counts against the budget, so the
// result is never farther than v_bar from y.
inline Vec2 advance_along(const PlannedPath& path, const Vec2& y, double v_bar) {
  const auto& w = path.waypoints;
  if (w.empty()) throw std::invalid_argument("advance_along on an empty path");
  if (w.size() == 1) {
    const Vec2 d = w.front() - y;
    const double len = norm(d);
    return len <= v_bar ? w.front() : y + d * (v_bar / len);
  }

  // Closest point of the polyline to y.
  std::size_t seg = 0;
  double seg_t = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const Vec2 a = w[i];
    const Vec2 ab = w[i + 1] - a;
    const double l2 = norm_sq(ab);
    const double tt = l2 > 0.0 ? std::clamp(dot(y - a, ab) / l2, 0.0, 1.0) : 0.0;
    const double d = norm_sq(a + ab * tt - y);
    if (d < best) {
      best = d;
      seg = i;
      seg_t = tt;
    }
  }

  Vec2 cur = w[seg] + (w[seg + 1] - w[seg]) * seg_t;
  double budget = v_bar;
  const double hop = distance(cur, y);
  if (hop >= budget) return y + (cur - y) * (budget / hop);
  budget -= hop;

  for (std::size_t i = seg + 1; i < w.size(); ++i) {
    const Vec2 d = w[i] - cur;
    const double len = norm(d);
    if (len >= budget) return cur + d * (budget / len);
    budget -= len;
    cur = w[i];
  }
  return w.back();
}

}  // namespace shepherd
