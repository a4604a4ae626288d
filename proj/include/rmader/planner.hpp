#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "rmader/collision.hpp"
#include "rmader/rng.hpp"
#include "rmader/store.hpp"
#include "rmader/trajectory.hpp"

namespace rmader {

/// A planning request: produce a dynamically feasible candidate that starts
/// exactly at the committed trajectory's state at t_switch, ends in terminal
/// hover, and is conflict-free against the store snapshot.
struct PlanRequest {
  Vec3 start_pos{0, 0, 0}, start_vel{0, 0, 0}, start_acc{0, 0, 0};
  double t_switch = 0.0;
  double t_now = 0.0;  // check-window start (start of the optimization)
  Vec3 goal{0, 0, 0};
  const PeerStore* snapshot = nullptr;
  DynamicLimits limits;
  double horizon = 4.0;
  AgentBox own_box;
  AgentBox peer_box;
  double goal_tol = 0.1;
  double lambda_detour = 0.5;
  int retry_level = 0;  // consecutive failed iterations; widens the lattice
};

struct PlanResult {
  bool feasible = false;
  TrajectorySpline candidate;
  /// When infeasible: the store entries the cheapest candidate conflicted
  /// with (owner, seq), so detections in the optimization phase can be
  /// attributed to specific trajectories.
  std::vector<std::pair<int, std::uint64_t>> conflicts;
};

namespace detail {

/// Coefficient matrix of the candidate spline system: 4 uniform cubic pieces
/// in local parameter u, constrained by start p/v/a, C0/C1/C2 at the three
/// interior knots, the waypoint value at knot 2, and terminal p/v/a. The
/// matrix is identical for every axis and every duration (h only scales the
/// right-hand side), so it is factorized once.
inline const Eigen::PartialPivLU<Eigen::Matrix<double, 16, 16>>& candidate_system() {
  static const auto lu = [] {
    Eigen::Matrix<double, 16, 16> m = Eigen::Matrix<double, 16, 16>::Zero();
    int r = 0;
    auto c = [](int seg, int k) { return 4 * seg + k; };
    m(r++, c(0, 0)) = 1.0;  // p(0)
    m(r++, c(0, 1)) = 1.0;  // v(0) * h
    m(r++, c(0, 2)) = 2.0;  // a(0) * h^2
    for (int s = 0; s < 3; ++s) {
      m(r, c(s, 0)) = m(r, c(s, 1)) = m(r, c(s, 2)) = m(r, c(s, 3)) = 1.0;
      m(r++, c(s + 1, 0)) = -1.0;
      m(r, c(s, 1)) = 1.0;
      m(r, c(s, 2)) = 2.0;
      m(r, c(s, 3)) = 3.0;
      m(r++, c(s + 1, 1)) = -1.0;
      m(r, c(s, 2)) = 2.0;
      m(r, c(s, 3)) = 6.0;
      m(r++, c(s + 1, 2)) = -2.0;
    }
    m(r++, c(2, 0)) = 1.0;  // waypoint value at knot 2
    m(r, c(3, 0)) = m(r, c(3, 1)) = m(r, c(3, 2)) = m(r, c(3, 3)) = 1.0;
    ++r;  // p(T)
    m(r, c(3, 1)) = 1.0;
    m(r, c(3, 2)) = 2.0;
    m(r++, c(3, 3)) = 3.0;  // v(T) = 0
    m(r, c(3, 2)) = 2.0;
    m(r++, c(3, 3)) = 6.0;  // a(T) = 0
    return Eigen::PartialPivLU<Eigen::Matrix<double, 16, 16>>(m);
  }();
  return lu;
}

/// Solve the 4-piece spline for one geometric layout and duration.
inline TrajectorySpline solve_candidate(const PlanRequest& req, const Vec3& waypoint,
                                        const Vec3& target, double duration) {
  double h = duration / 4.0;
  Eigen::Matrix<double, 16, 3> rhs = Eigen::Matrix<double, 16, 3>::Zero();
  for (int axis = 0; axis < 3; ++axis) {
    rhs(0, axis) = req.start_pos[axis];
    rhs(1, axis) = req.start_vel[axis] * h;
    rhs(2, axis) = req.start_acc[axis] * h * h;
    rhs(12, axis) = waypoint[axis];
    rhs(13, axis) = target[axis];
  }
  Eigen::Matrix<double, 16, 3> coef = candidate_system().solve(rhs);

  TrajectorySpline traj;
  traj.terminal_hover = true;
  traj.knots.resize(5);
  for (int i = 0; i <= 4; ++i) traj.knots[i] = req.t_switch + i * h;
  traj.segments.resize(4);
  for (int s = 0; s < 4; ++s) {
    for (int axis = 0; axis < 3; ++axis) {
      double a = coef(4 * s + 0, axis), b = coef(4 * s + 1, axis);
      double cc = coef(4 * s + 2, axis), d = coef(4 * s + 3, axis);
      traj.segments[s].ctrl[0][axis] = a;
      traj.segments[s].ctrl[1][axis] = a + b / 3.0;
      traj.segments[s].ctrl[2][axis] = a + 2.0 * b / 3.0 + cc / 3.0;
      traj.segments[s].ctrl[3][axis] = a + b + cc + d;
    }
  }
  return traj;
}

}  // namespace detail

/// Constant-position fallback/goal plan.
inline TrajectorySpline hover_plan(const Vec3& position, double t_switch) {
  return hover_spline(-1, 0, position, t_switch);
}

/// Goal-directed candidate generation: a straight layout plus a lattice of
/// lateral/vertical detour waypoints (scaled by distance to goal, jittered by
/// the seeded rng), each time-dilated until the element-wise dynamic limits
/// pass, then filtered against the store snapshot in cost order; the first
/// surviving candidate is the min-cost one. Returns infeasible if every
/// layout fails.
inline PlanResult plan(const PlanRequest& req, std::uint64_t seed) {
  PlanResult result;
  Rng rng(seed);

  Vec3 to_goal = req.goal - req.start_pos;
  double dist = to_goal.norm();
  // parking must not discard residual motion: the hover candidate is only
  // allowed from an exactly settled state (terminal hover of the previous
  // candidate), otherwise a commit would break third-order continuity
  bool at_rest = req.start_vel.norm() < 1e-12 && req.start_acc.norm() < 1e-12;

  auto entries = req.snapshot ? req.snapshot->constraints(req.peer_box)
                              : std::vector<StoreEntryRef>{};
  double window_start = std::min(req.t_now, req.t_switch);
  auto window_end = [&](const TrajectorySpline& cand) {
    double end = cand.end_time();
    if (req.snapshot) end = std::max(end, req.snapshot->constraints_end_time());
    return std::max(end, window_start + 0.1);
  };
  auto store_clean = [&](const TrajectorySpline& cand) {
    return !check_against_store(cand, entries, req.own_box, window_start, window_end(cand))
                .in_conflict;
  };

  // within tolerance of the goal: park (the hover must itself be clean)
  if (dist <= req.goal_tol && at_rest) {
    TrajectorySpline hover = hover_plan(req.start_pos, req.t_switch);
    if (store_clean(hover)) {
      result.feasible = true;
      result.candidate = hover;
      return result;
    }
  }

  struct Layout {
    Vec3 waypoint;
    Vec3 target;
    double cost = 0.0;
    double path_length = 0.0;
  };
  std::vector<Layout> layouts;

  if (dist > 1e-9) {
    Vec3 dir = to_goal / dist;
    Vec3 lat = dir.cross(Vec3::UnitZ());
    if (lat.norm() < 1e-6) lat = Vec3::UnitX();
    lat.normalize();
    Vec3 vert = lat.cross(dir).normalized();
    Vec3 mid = req.start_pos + 0.5 * to_goal;
    double widen = 1.0 + 0.25 * std::min(req.retry_level, 4);
    double scale = std::clamp(0.35 * dist, 0.5, 3.0) * widen;

    auto add = [&](const Vec3& waypoint, const Vec3& target, double detour) {
      double path = (waypoint - req.start_pos).norm() + (target - waypoint).norm();
      layouts.push_back({waypoint, target, req.lambda_detour * detour, path});
    };

    // Cost shaping that keeps opposing flows compatible: the smallest
    // right-hand detour is discounted below the straight corridor (opposing
    // lanes then pass offset on opposite world sides instead of meeting
    // head-on) and a per-iteration jitter reorders near-ties so repeated
    // replans explore instead of re-colliding.
    auto shaped = [&](double lo, double s, double detour) {
      if (lo > 0.0) detour -= 0.25 * s;
      if (lo < 0.0) detour += 0.15 * s * (-lo);
      return detour + rng.uniform(0.0, 0.1) * s;
    };

    // full legs: straight to the goal plus a lateral/vertical detour lattice
    for (double lo : {0.0, 0.6, -0.6, 1.2, -1.2, 1.8, -1.8, 2.4, -2.4}) {
      for (double vo : {0.0, 0.8, -0.8}) {
        Vec3 off = scale * (lo * lat + vo * vert);
        if (lo != 0.0 || vo != 0.0)
          off += scale * 0.08 * (rng.uniform(-1, 1) * lat + rng.uniform(-1, 1) * vert);
        Vec3 waypoint = mid + off;
        double detour = (waypoint - req.start_pos).norm() + (req.goal - waypoint).norm() - dist;
        add(waypoint, req.goal, shaped(lo, scale, detour));
      }
    }

    // partial legs that stage short of the halfway point: they keep swap
    // scenarios live while the contested middle or the goal region is still
    // occupied, without parking inside it (the remaining distance is costed
    // as detour, so full legs win whenever they are feasible)
    if (dist > 1.5) {
      double pscale = std::clamp(0.35 * dist, 0.5, 2.0) * widen;
      for (double frac : {0.45, 0.25}) {
        for (double lo : {0.6, 0.0, -0.6, 1.2, -1.2}) {
          Vec3 off = pscale * lo * lat;
          if (lo != 0.0) off += pscale * 0.08 * rng.uniform(-1, 1) * lat;
          Vec3 target = req.start_pos + frac * to_goal;
          Vec3 waypoint = req.start_pos + 0.5 * frac * to_goal + off;
          double path = (waypoint - req.start_pos).norm() + (target - waypoint).norm();
          double detour = path - frac * dist + 2.0 * (1.0 - frac) * dist;
          add(waypoint, target, shaped(lo, pscale, detour));
        }
      }
    }
  }

  struct Built {
    TrajectorySpline traj;
    double cost;
  };
  std::vector<Built> built;
  double cruise = 0.8 * req.limits.v_max;

  for (const auto& l : layouts) {
    double duration = std::max(0.8, std::min(req.horizon, l.path_length / std::max(cruise, 0.1)));
    std::optional<TrajectorySpline> ok;
    for (int dilation = 0; dilation < 40; ++dilation) {
      TrajectorySpline cand = detail::solve_candidate(req, l.waypoint, l.target, duration);
      if (check_dynamic_limits(cand, req.limits).empty()) {
        ok = std::move(cand);
        break;
      }
      duration *= 1.25;
    }
    if (ok) built.push_back({std::move(*ok), duration + l.cost});
  }
  if (at_rest) {
    // stay-and-hover fallback, costed above everything goal-directed
    built.push_back({hover_plan(req.start_pos, req.t_switch), 1e6});
  }

  std::stable_sort(built.begin(), built.end(),
                   [](const Built& a, const Built& b) { return a.cost < b.cost; });

  for (const auto& c : built) {
    if (store_clean(c.traj)) {
      result.feasible = true;
      result.candidate = c.traj;
      return result;
    }
  }

  // everything conflicted: attribute the cheapest candidate's conflicts
  if (!built.empty()) {
    const auto& cand = built.front().traj;
    for (const auto& e : entries) {
      if (check_pair(cand, *e.traj, req.own_box, e.box, window_start, window_end(cand))
              .in_conflict)
        result.conflicts.push_back({e.traj->owner, e.traj->seq});
    }
  }
  return result;
}

}  // namespace rmader
