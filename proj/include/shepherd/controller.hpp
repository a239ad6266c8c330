#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shepherd/metrics.hpp"
#include "shepherd/planner.hpp"
#include "shepherd/separation.hpp"
#include "shepherd/swarm.hpp"
#include "shepherd/vec2.hpp"

namespace shepherd {

using Rng = std::mt19937_64;
inline constexpr std::string_view kRngName = "std::mt19937_64";

enum class Method { proposed, bipartite };

inline std::string_view to_string(Method m) {
  return m == Method::proposed ? "proposed" : "bipartite";
}

inline Method parse_method(std::string_view s) {
  if (s == "proposed") return Method::proposed;
  if (s == "bipartite") return Method::bipartite;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

// Thrown by select_pinning when the target has no sheep in range.
class AlreadySeparatedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Controller quantities for one (pinning, target) pair at one instant.
struct PinningContext {
  SheepId p{0};
  SheepId t{0};
  std::vector<SheepId> n_pg;
  double d_p{0.0};
  double v_p_align{0.0};
  Vec2 v_p_star;
  Vec2 w;        // shepherd-induced velocity required at p
  Vec2 y_raw;    // ideal position before the feasibility check
  Vec2 y_star;   // returned ideal position
  bool projected{false};
  bool w_fallback{false};
};

// Closed ball of radius R + epsilon around p, p excluded.
inline std::vector<SheepId> extended_neighbor_set(const SwarmState& state, SheepId p,
                                                  const SwarmParams& params) {
  state.check_id(p);
  std::vector<SheepId> out;
  const double reach = params.r + params.epsilon;
  for (SheepId j = 0; j < state.size(); ++j) {
    if (j != p && distance(state.positions[p], state.positions[j]) <= reach) out.push_back(j);
  }
  return out;
}

namespace detail {

inline double sign_of(SheepId j, SheepId t) { return j == t ? 1.0 : -1.0; }

inline void check_pair(const SwarmState& state, SheepId p, SheepId t) {
  state.check_id(p);
  state.check_id(t);
  if (p == t) throw std::invalid_argument("pinning sheep must differ from the target");
}

}  // namespace detail

// D_p: pushes p away from t and toward its other extended neighbors.
inline double connectivity_scalar(const SwarmState& state, SheepId p, SheepId t,
                                  const SwarmParams& params) {
  detail::check_pair(state, p, t);
  double sum = 0.0;
  for (SheepId j : extended_neighbor_set(state, p, params)) {
    sum += detail::sign_of(j, t) * (distance(state.positions[p], state.positions[j]) - params.r);
  }
  return sum;
}

// V_p: signed velocity mismatch against the extended neighbors.
inline double alignment_scalar(const SwarmState& state, SheepId p, SheepId t,
                               const SwarmParams& params) {
  detail::check_pair(state, p, t);
  double sum = 0.0;
  for (SheepId j : extended_neighbor_set(state, p, params)) {
    sum += detail::sign_of(j, t) * norm(state.velocities[j] - state.velocities[p]);
  }
  return sum;
}

inline Vec2 ideal_velocity(const SwarmState& state, SheepId p, SheepId t, const SwarmParams& params) {
  detail::check_pair(state, p, t);
  const auto n_pg = extended_neighbor_set(state, p, params);
  if (n_pg.empty()) throw std::invalid_argument("ideal velocity needs a nonempty extended neighbor set");
  const Vec2 xp = state.positions[p];
  double dist_sum = 0.0;
  Vec2 offset_sum;
  for (SheepId j : n_pg) {
    dist_sum += distance(xp, state.positions[j]);
    offset_sum += xp - state.positions[j];
  }
  if (dist_sum < kSingularDistance) throw SingularityError("pinning sheep coincides with its neighbors");
  const double scale = connectivity_scalar(state, p, t, params) + alignment_scalar(state, p, t, params);
  return -(scale / dist_sum) * offset_sum;
}

// Shepherd position whose inverse-square push at x_p equals w:
// y = x_p - (w / |w|) sqrt(k_s3 / |w|).
inline Vec2 shepherd_position_for(const Vec2& x_p, const Vec2& w, double k_s3) {
  const double wn = norm(w);
  return x_p - (w / wn) * std::sqrt(k_s3 / wn);
}

// Right-hand side of the implicit ideal-position equation, solved for the
// shepherd-induced velocity: k_s3 (x_p - y) / |y - x_p|^3.
inline Vec2 induced_velocity(const Vec2& x_p, const Vec2& y, double k_s3) {
  const double d = distance(y, x_p);
  return (x_p - y) * (k_s3 / (d * d * d));
}

namespace detail {

// Retracted endpoints of every feasible interval, as candidate coefficients.
inline std::vector<double> feasible_candidates(const FeasibleSets& sets) {
  std::vector<double> out;
  for (const Interval& raw : sets.all()) {
    const Interval iv = retract(raw, kClampMargin);
    out.push_back(iv.lo);
    if (iv.hi != iv.lo) out.push_back(iv.hi);
  }
  return out;
}

}  // namespace detail

// Feasible-line point with the largest one-step separation gain.
inline Vec2 max_gain_feasible_point(const Vec2& x_p, const Vec2& x_t, const FeasibleSets& sets) {
  const Vec2 d = x_t - x_p;
  double best_c = 0.0;
  double best_gain = -1.0;
  bool found = false;
  for (double c : detail::feasible_candidates(sets)) {
    double g = std::numeric_limits<double>::infinity();
    try {
      g = std::abs(separation_gain(d, c, sets.params));
    } catch (const SingularityError&) {
    }
    if (!found || g > best_gain || (g == best_gain && c < best_c)) {
      best_c = c;
      best_gain = g;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("feasible sets are empty");
  return x_p + best_c * d;
}

// Feasible-line point closest to the pinning sheep itself.
inline Vec2 nearest_feasible_point_to_pinning(const Vec2& x_p, const Vec2& x_t, const FeasibleSets& sets) {
  double best_c = 0.0;
  bool found = false;
  for (double c : detail::feasible_candidates(sets)) {
    if (!found || std::abs(c) < std::abs(best_c) || (std::abs(c) == std::abs(best_c) && c < best_c)) {
      best_c = c;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("feasible sets are empty");
  return x_p + best_c * (x_t - x_p);
}

inline PinningContext pinning_context(const SwarmState& state, SheepId p, SheepId t,
                                      const SwarmParams& params, const FeasibleSets& sets) {
  detail::check_pair(state, p, t);
  if (!(params.k_s3 > 0.0)) throw std::invalid_argument("ideal shepherd position needs k_s3 > 0");
  if (neighbor_set(state, p, params.r).empty()) {
    throw std::invalid_argument("pinning sheep has no neighbors; shepherd cannot act on it");
  }

  PinningContext ctx;
  ctx.p = p;
  ctx.t = t;
  ctx.n_pg = extended_neighbor_set(state, p, params);
  ctx.d_p = connectivity_scalar(state, p, t, params);
  ctx.v_p_align = alignment_scalar(state, p, t, params);
  ctx.v_p_star = ideal_velocity(state, p, t, params);

  const ForceTriple f = force_components(state, p, params);
  ctx.w = ctx.v_p_star - params.k_s1 * f.v1 - params.k_s2 * f.v2;

  const Vec2 x_p = state.positions[p];
  const Vec2 x_t = state.positions[t];
  if (norm(ctx.w) == 0.0) {
    ctx.w_fallback = true;
    ctx.y_raw = ctx.y_star = max_gain_feasible_point(x_p, x_t, sets);
    return ctx;
  }

  ctx.y_raw = shepherd_position_for(x_p, ctx.w, params.k_s3);
  const Vec2 d = x_t - x_p;
  const double c = line_coefficient(ctx.y_raw, x_p, x_t);
  const double off_line = std::abs(cross(ctx.y_raw - x_p, d)) / norm(d);
  if (off_line <= 1e-12 * std::max(1.0, norm(ctx.y_raw - x_p)) && contains(sets, c)) {
    ctx.y_star = ctx.y_raw;
  } else {
    ctx.y_star = project_to_feasible_line(ctx.y_raw, x_p, x_t, sets);
    ctx.projected = true;
  }
  return ctx;
}

inline Vec2 ideal_shepherd_position(const SwarmState& state, SheepId p, SheepId t,
                                    const SwarmParams& params, const FeasibleSets& sets) {
  return pinning_context(state, p, t, params, sets).y_star;
}

// Baseline: the midpoint of the pinning and target sheep.
inline Vec2 bipartite_ideal_position(const SwarmState& state, SheepId p, SheepId t) {
  state.check_id(p);
  state.check_id(t);
  return 0.5 * (state.positions[p] + state.positions[t]);
}

// Uniform index in [0, n) from exactly one 64-bit draw.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(rng()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

inline SheepId select_pinning(const SwarmState& state, SheepId t, double r, Rng& rng) {
  const auto nt = neighbor_set(state, t, r);
  if (nt.empty()) throw AlreadySeparatedError("target sheep is already separated");
  return nt[uniform_index(rng, nt.size())];
}

struct SinglingOptions {
  Method method{Method::proposed};
  PlannerConfig planner;
  std::uint64_t step_budget{5000};
  // Draw the next pinning sheep only among neighbors not used before
  // (falls back to all current neighbors when that leaves none).
  bool exclude_used_pinning{false};
  bool record_trace{false};
  double domain_bound{10.0};
};

inline constexpr std::int64_t kNoPinning = -1;

struct StepRecord {
  std::uint64_t step{0};
  Vec2 shepherd;
  std::vector<Vec2> positions;
  std::size_t target_neighbors{0};
  std::size_t max_component{0};
  std::int64_t pinning{kNoPinning};
  bool fallback{false};
};

struct TrialResult {
  bool success{false};
  std::uint64_t steps{0};
  std::vector<double> connectivity_series;  // one entry per simulated step
  double initial_connectivity{1.0};
  std::uint64_t seed{0};
  Method method{Method::proposed};
  SheepId target{0};
  std::uint64_t pinning_selections{0};
  std::uint64_t fallback_events{0};
  SwarmState final_state;
  std::vector<StepRecord> trace;  // filled when record_trace is set

  // Time average of the max-component fraction; the initial value when no
  // step was simulated.
  double mean_connectivity() const {
    if (connectivity_series.empty()) return initial_connectivity;
    double s = 0.0;
    for (double v : connectivity_series) s += v;
    return s / static_cast<double>(connectivity_series.size());
  }
  double final_connectivity() const {
    return connectivity_series.empty() ? initial_connectivity : connectivity_series.back();
  }
};

// Goal of the shepherd for the current pinning pair.
using GoalFn = std::function<Vec2(const SwarmState&, SheepId p, SheepId t)>;

struct ShepherdMove {
  Vec2 next;
  bool fallback{false};
};

// One shepherd move toward goal: jump when within v_bar, else follow an A*
// route around non-exempt sheep, else go straight.
inline ShepherdMove move_shepherd(const SwarmState& state, SheepId p, SheepId t, const Vec2& goal,
                                  const SwarmParams& params, const PlannerConfig& planner) {
  const Vec2 y = state.shepherd;
  if (distance(y, goal) <= params.v_bar) return {goal, false};

  const SheepId exempt[] = {p, t};
  const Vec2 extra[] = {goal};
  try {
    const PlannerGrid grid = build_grid(state, planner.cell, planner.r_avoid, exempt, 2.0 * params.r, extra);
    PlannedPath path = plan(grid, y, goal);
    path.waypoints.insert(path.waypoints.begin(), y);
    if (!path.goal_substituted) path.waypoints.push_back(goal);
    return {advance_along(path, y, params.v_bar), false};
  } catch (const UnreachableError&) {
    const Vec2 d = goal - y;
    return {y + d * (params.v_bar / norm(d)), true};
  }
}

namespace detail {

inline std::size_t remaining_max_component(const SwarmState& state, SheepId t, double r) {
  return max_component_size(interaction_graph(state, t, r));
}

}  // namespace detail

// Algorithm MAIN with a pluggable goal. run_singling binds the goal to the
// chosen method; everything else is shared.
inline TrialResult singling_loop(SwarmState state, SheepId t, const SwarmParams& params,
                                 const SinglingOptions& opts, Rng& rng, const GoalFn& goal_fn) {
  params.validate();
  state.check_id(t);
  if (state.size() < 2) throw std::invalid_argument("singling needs at least two sheep");
  if (opts.step_budget == 0) throw std::invalid_argument("step budget must be positive");

  TrialResult res;
  res.method = opts.method;
  res.target = t;
  const double others = static_cast<double>(state.size() - 1);
  res.initial_connectivity = static_cast<double>(detail::remaining_max_component(state, t, params.r)) / others;

  std::set<SheepId> used;
  std::uint64_t steps = 0;

  const auto tick = [&](SheepId p) {
    const Vec2 goal = goal_fn(state, p, t);
    const ShepherdMove mv = move_shepherd(state, p, t, goal, params, opts.planner);
    state = step(state, params, mv.next);
    ++steps;
    if (mv.fallback) ++res.fallback_events;

    const std::size_t comp = detail::remaining_max_component(state, t, params.r);
    res.connectivity_series.push_back(static_cast<double>(comp) / others);
    if (opts.record_trace) {
      StepRecord rec;
      rec.step = steps;
      rec.shepherd = state.shepherd;
      rec.positions = state.positions;
      rec.target_neighbors = neighbor_set(state, t, params.r).size();
      rec.max_component = comp;
      rec.pinning = static_cast<std::int64_t>(p);
      rec.fallback = mv.fallback;
      res.trace.push_back(std::move(rec));
    }
  };

  while (true) {
    const auto nt = neighbor_set(state, t, params.r);
    if (nt.empty()) {
      res.success = true;
      break;
    }
    if (steps >= opts.step_budget) break;

    std::vector<SheepId> pool = nt;
    if (opts.exclude_used_pinning) {
      std::erase_if(pool, [&](SheepId j) { return used.count(j) != 0; });
      if (pool.empty()) pool = nt;
    }
    const SheepId p = pool[uniform_index(rng, pool.size())];
    used.insert(p);
    ++res.pinning_selections;

    while (distance(state.positions[t], state.positions[p]) <= params.r && steps < opts.step_budget) {
      tick(p);
    }
  }

  res.steps = steps;
  res.final_state = std::move(state);
  return res;
}

inline GoalFn proposed_goal(const SwarmParams& params, const FeasibleSets& sets) {
  return [params, sets](const SwarmState& s, SheepId p, SheepId t) {
    if (neighbor_set(s, p, params.r).empty()) {
      return nearest_feasible_point_to_pinning(s.positions[p], s.positions[t], sets);
    }
    return ideal_shepherd_position(s, p, t, params, sets);
  };
}

inline GoalFn bipartite_goal() {
  return [](const SwarmState& s, SheepId p, SheepId t) { return bipartite_ideal_position(s, p, t); };
}

inline TrialResult run_singling(const SwarmState& state, SheepId t, const SwarmParams& params,
                                const SinglingOptions& opts, Rng& rng) {
  GoalFn goal;
  if (opts.method == Method::proposed) {
    goal = proposed_goal(params, feasible_sets(params, opts.domain_bound));
  } else {
    goal = bipartite_goal();
  }
  return singling_loop(state, t, params, opts, rng, goal);
}

}  // namespace shepherd
