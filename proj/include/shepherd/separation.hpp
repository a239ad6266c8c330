#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "shepherd/swarm.hpp"
#include "shepherd/vec2.hpp"

namespace shepherd {

// Open interval (lo, hi).
struct Interval {
  double lo{0.0};
  double hi{0.0};

  bool contains(double c) const { return lo < c && c < hi; }
  double width() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Line coefficients c for which a shepherd at x_1 + c (x_2 - x_1) strictly
// increases the distance of an isolated sheep pair within range R.
//
// The three pieces live on (-inf, 0), (0, 1) and (1, inf). The unbounded pieces
// are truncated at domain_bound from their finite edge.
struct FeasibleSets {
  double t1{0.0};
  double t2{0.0};
  double t3{0.0};
  std::vector<Interval> c1;
  std::vector<Interval> c2;
  std::vector<Interval> c3;
  double tol{1e-9};
  double domain_bound{10.0};
  SwarmParams params;  // gains used to rank clamp candidates

  bool empty() const { return c1.empty() && c2.empty() && c3.empty(); }

  std::vector<Interval> all() const {
    std::vector<Interval> out;
    out.insert(out.end(), c1.begin(), c1.end());
    out.insert(out.end(), c2.begin(), c2.end());
    out.insert(out.end(), c3.begin(), c3.end());
    return out;
  }
};

// Left-hand sides of the three feasibility inequalities.
inline double c1_criterion(double c) { return 1.0 / (c * c) - 1.0 / ((1.0 - c) * (1.0 - c)); }
inline double c2_criterion(double c) { return 1.0 / (c * c) + 1.0 / ((c - 1.0) * (c - 1.0)); }
inline double c3_criterion(double c) { return 1.0 / ((c - 1.0) * (c - 1.0)) - 1.0 / (c * c); }

inline double outer_threshold(const SwarmParams& p) {
  const double r2 = p.r * p.r;
  return 2.0 * (p.k_s1 - r2 * p.k_s2 + r2 * std::max(p.k_s2, p.r)) / p.k_s3;
}

inline double inner_threshold(const SwarmParams& p) {
  return 2.0 * (p.k_s2 * p.r * p.r - p.k_s1) / p.k_s3;
}

namespace detail {

// Bisection for a sign change of pred on [a, b] where pred(a) holds and
// pred(b) does not. Returns the boundary to within tol.
inline double bisect(const std::function<bool(double)>& pred, double a, double b, double tol) {
  while (std::abs(b - a) > tol) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    if (pred(m)) a = m; else b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

inline FeasibleSets feasible_sets(const SwarmParams& params, double domain_bound = 10.0,
                                  double tol = 1e-9) {
  if (!(params.k_s3 > 0.0)) {
    throw std::invalid_argument("feasible sets require k_s3 > 0");
  }
  if (!(domain_bound > 0.0)) throw std::invalid_argument("domain_bound must be positive");

  FeasibleSets s;
  s.t1 = s.t3 = outer_threshold(params);
  s.t2 = inner_threshold(params);
  s.tol = tol;
  s.domain_bound = domain_bound;
  s.params = params;

  // Outer pieces: with s = -c (or s = c - 1), the criterion
  // 1/s^2 - 1/(1+s)^2 is positive and strictly decreasing in s.
  const auto outer = [](double dist) { return 1.0 / (dist * dist) - 1.0 / ((1.0 + dist) * (1.0 + dist)); };
  double reach = 0.0;
  if (s.t1 <= 0.0 || outer(domain_bound) > s.t1) {
    reach = domain_bound;
  } else {
    // outer(0+) = +inf > t1, outer(domain_bound) <= t1.
    reach = detail::bisect([&](double d) { return outer(d) > s.t1; }, 0.0, domain_bound, tol);
  }
  if (reach > 0.0) {
    s.c1.push_back({-reach, 0.0});
    s.c3.push_back({1.0, 1.0 + reach});
  }

  // Inner piece: convex on (0, 1), symmetric about 1/2 with minimum 8.
  if (s.t2 < 8.0) {
    s.c2.push_back({0.0, 1.0});
  } else {
    const double a = detail::bisect([&](double c) { return c2_criterion(c) > s.t2; }, 0.0, 0.5, tol);
    if (a > 0.0) {
      s.c2.push_back({0.0, a});
      s.c2.push_back({1.0 - a, 1.0});
    }
  }
  return s;
}

inline bool contains(const FeasibleSets& sets, double c) {
  const auto in = [c](const std::vector<Interval>& v) {
    return std::any_of(v.begin(), v.end(), [c](const Interval& i) { return i.contains(c); });
  };
  return in(sets.c1) || in(sets.c2) || in(sets.c3);
}

// Proof scalar f with v_2 - v_1 = f * delta for the unsaturated pair dynamics.
inline double f_scalar(const Vec2& delta, double c, const SwarmParams& params) {
  const double d = norm(delta);
  if (d < kSingularDistance) throw SingularityError("zero pair separation");
  const double ac = std::abs(c) * d;
  const double ac1 = std::abs(c - 1.0) * d;
  if (ac < kSingularDistance || ac1 < kSingularDistance) {
    throw SingularityError("shepherd coincides with a sheep of the pair");
  }
  return c * params.k_s3 / (ac * ac * ac) - (c - 1.0) * params.k_s3 / (ac1 * ac1 * ac1) +
         2.0 * (params.k_s1 - params.k_s2 * d * d) / (d * d * d);
}

inline double gain_from_f(double d, double f) { return d * (std::abs(f + 1.0) - 1.0); }

// One-step change of the pair distance under unsaturated dynamics.
inline double separation_gain(const Vec2& delta, double c, const SwarmParams& params) {
  return gain_from_f(norm(delta), f_scalar(delta, c, params));
}

inline constexpr double kClampMargin = 1e-6;

namespace detail {

// Closed interval used for clamping: the open interval shrunk by margin.
inline Interval retract(const Interval& i, double margin) {
  if (i.width() <= 2.0 * margin) {
    const double m = 0.5 * (i.lo + i.hi);
    return {m, m};
  }
  return {i.lo + margin, i.hi - margin};
}

inline double clamp_coefficient(double c_star, const Vec2& delta, const FeasibleSets& sets,
                                double margin) {
  const auto intervals = sets.all();
  if (intervals.empty()) throw std::invalid_argument("feasible sets are empty");

  double best_c = std::numeric_limits<double>::quiet_NaN();
  double best_dist = std::numeric_limits<double>::infinity();
  double best_gain = -1.0;
  for (const Interval& raw : intervals) {
    const Interval iv = retract(raw, margin);
    const double c = std::clamp(c_star, iv.lo, iv.hi);
    const double dist = std::abs(c - c_star);
    double gain = 0.0;
    try {
      gain = std::abs(separation_gain(delta, c, sets.params));
    } catch (const SingularityError&) {
      gain = std::numeric_limits<double>::infinity();
    }
    const bool better = dist < best_dist ||
                        (dist == best_dist && (gain > best_gain || (gain == best_gain && c < best_c)));
    if (better) {
      best_c = c;
      best_dist = dist;
      best_gain = gain;
    }
  }
  return best_c;
}

}  // namespace detail

// Point of Y = {x_p + c (x_t - x_p) : c feasible} closest to y_star. Open
// endpoints are pulled inward by kClampMargin.
inline Vec2 project_to_feasible_line(const Vec2& y_star, const Vec2& x_p, const Vec2& x_t,
                                     const FeasibleSets& sets, double margin = kClampMargin) {
  const Vec2 d = x_t - x_p;
  const double d2 = norm_sq(d);
  if (std::sqrt(d2) < kSingularDistance) throw SingularityError("pinning and target sheep coincide");
  const double c_star = dot(y_star - x_p, d) / d2;
  const double c = detail::clamp_coefficient(c_star, d, sets, margin);
  return x_p + c * d;
}

// Line coefficient of z relative to the pair (x_p, x_t).
inline double line_coefficient(const Vec2& z, const Vec2& x_p, const Vec2& x_t) {
  const Vec2 d = x_t - x_p;
  return dot(z - x_p, d) / norm_sq(d);
}

}  // namespace shepherd
