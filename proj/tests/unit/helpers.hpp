#pragma once

#include "rmader/planner.hpp"
#include "rmader/rng.hpp"
#include "rmader/serialize.hpp"
#include "rmader/trajectory.hpp"

namespace rmader::test {

/// Random C2 spline with a nontrivial start state: built through the same
/// constrained construction the planner uses, so validate() holds.
inline TrajectorySpline random_spline(Rng& rng, double t0 = 0.0) {
  PlanRequest req;
  req.start_pos = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
  req.start_vel = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
  req.start_acc = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  req.t_switch = t0;
  Vec3 target(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-8, 8));
  Vec3 waypoint = 0.5 * (req.start_pos + target) +
                  Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
  double duration = rng.uniform(1.0, 4.0);
  return detail::solve_candidate(req, waypoint, target, duration);
}

/// Straight single-segment Bezier from a to b over [t0, t1] with collinear,
/// equally spaced control points (constant velocity).
inline TrajectorySpline straight_spline(const Vec3& a, const Vec3& b, double t0, double t1,
                                        int owner = 0) {
  TrajectorySpline t;
  t.owner = owner;
  t.knots = {t0, t1};
  t.segments.push_back(
      CubicSegment{{a, a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0, b}});
  t.terminal_hover = false;
  return t;
}

inline bool splines_identical(const TrajectorySpline& a, const TrajectorySpline& b) {
  return spline_to_json(a).dump() == spline_to_json(b).dump();
}

}  // namespace rmader::test
