#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "shepherd/vec2.hpp"

namespace shepherd {

using SheepId = std::size_t;

// Raised when two agents are closer than kSingularDistance and the
// inverse-power force laws would blow up.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kSingularDistance = 1e-9;

struct SwarmParams {
  double k_s1{1.0};  // inter-sheep repulsion gain
  double k_s2{4.0};  // inter-sheep attraction gain
  double k_s3{0.5};  // shepherd repulsion gain
  double r{1.0};     // sensing radius
  double v_bar{0.5};  // per-step speed cap
  double epsilon{0.3};  // extended-neighborhood margin, 0 < epsilon < r

  // Off only for analysis of the raw force law.
  bool saturation{true};
  // Default: a sheep with no neighbors ignores the shepherd.
  bool isolated_sheep_feel_shepherd{false};

  void validate() const {
    if (!(k_s1 >= 0.0) || !(k_s2 >= 0.0) || !(k_s3 >= 0.0)) {
      throw std::invalid_argument("gains k_s1, k_s2, k_s3 must be nonnegative");
    }
    if (!(r > 0.0)) throw std::invalid_argument("sensing radius r must be positive");
    if (!(v_bar > 0.0)) throw std::invalid_argument("speed cap v_bar must be positive");
    if (!(epsilon > 0.0 && epsilon < r)) {
      throw std::invalid_argument("epsilon must satisfy 0 < epsilon < r");
    }
  }
};

struct SwarmState {
  std::uint64_t k{0};
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;  // last applied movement per sheep
  Vec2 shepherd;

  SwarmState() = default;
  SwarmState(std::vector<Vec2> pos, Vec2 shepherd_pos)
      : positions(std::move(pos)), velocities(positions.size()), shepherd(shepherd_pos) {}

  std::size_t size() const { return positions.size(); }

  void check_id(SheepId i) const {
    if (i >= positions.size()) {
      throw std::out_of_range("sheep id " + std::to_string(i) + " out of range [0, " +
                              std::to_string(positions.size()) + ")");
    }
  }
};

struct ForceTriple {
  Vec2 v1;  // inter-sheep repulsion
  Vec2 v2;  // inter-sheep attraction
  Vec2 v3;  // shepherd repulsion
};

// phi_vbar: caps the norm at v_bar, keeps direction; zero maps to zero.
inline Vec2 saturate(const Vec2& v, double v_bar) {
  const double n = norm(v);
  if (n <= v_bar) return v;
  return v * (v_bar / n);
}

// Sheep strictly inside the open sensing disc of sheep i (i itself excluded).
inline std::vector<SheepId> neighbor_set(const SwarmState& state, SheepId i, double r) {
  state.check_id(i);
  std::vector<SheepId> out;
  const Vec2 xi = state.positions[i];
  for (SheepId j = 0; j < state.size(); ++j) {
    if (j != i && distance(state.positions[j], xi) < r) out.push_back(j);
  }
  return out;
}

namespace detail {

inline Vec2 shepherd_push(const Vec2& xi, const Vec2& y) {
  const Vec2 d = y - xi;
  const double dist = norm(d);
  if (dist < kSingularDistance) {
    throw SingularityError("shepherd coincides with a sheep");
  }
  return -d / (dist * dist * dist);
}

}  // namespace detail

inline ForceTriple force_components(const SwarmState& state, SheepId i, const SwarmParams& params) {
  state.check_id(i);
  ForceTriple f;
  const Vec2 xi = state.positions[i];
  std::size_t count = 0;
  for (SheepId j = 0; j < state.size(); ++j) {
    if (j == i) continue;
    const Vec2 d = state.positions[j] - xi;
    const double dist = norm(d);
    if (!(dist < params.r)) continue;
    if (dist < kSingularDistance) {
      throw SingularityError("sheep " + std::to_string(i) + " and " + std::to_string(j) +
                             " coincide");
    }
    f.v1 -= d / (dist * dist * dist);
    f.v2 += d / dist;
    ++count;
  }
  if (count == 0) {
    if (params.isolated_sheep_feel_shepherd) f.v3 = detail::shepherd_push(xi, state.shepherd);
    return f;
  }
  const double inv = 1.0 / static_cast<double>(count);
  f.v1 *= inv;
  f.v2 *= inv;
  f.v3 = detail::shepherd_push(xi, state.shepherd);
  return f;
}

// Movement vector of sheep i before the position update.
inline Vec2 sheep_velocity(const SwarmState& state, SheepId i, const SwarmParams& params) {
  const ForceTriple f = force_components(state, i, params);
  const Vec2 raw = params.k_s1 * f.v1 + params.k_s2 * f.v2 + params.k_s3 * f.v3;
  return params.saturation ? saturate(raw, params.v_bar) : raw;
}

// Synchronous update: all forces are evaluated on the frozen input state with
// the current shepherd position, then shepherd_next takes effect.
inline SwarmState step(const SwarmState& state, const SwarmParams& params, const Vec2& shepherd_next) {
  SwarmState next;
  next.k = state.k + 1;
  next.positions.resize(state.size());
  next.velocities.resize(state.size());
  for (SheepId i = 0; i < state.size(); ++i) {
    const Vec2 v = sheep_velocity(state, i, params);
    next.velocities[i] = v;
    next.positions[i] = state.positions[i] + v;
  }
  next.shepherd = shepherd_next;
  return next;
}

}  // namespace shepherd
