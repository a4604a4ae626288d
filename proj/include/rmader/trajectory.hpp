#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmader/geometry.hpp"

namespace rmader {

/// One cubic piece in the Bernstein (Bezier) basis: 4 control points, each a
/// 3-vector. The piece lives on an absolute time interval given by the
/// owning spline's knots.
struct CubicSegment {
  std::array<Vec3, 4> ctrl;
};

/// Time-parameterized piecewise-cubic 3-D trajectory. This is the object
/// agents exchange, store and check: the committed trajectory, the freshly
/// optimized candidate, and obstacle motions all use this representation.
///
/// Invariants (see validate()):
///  - knots strictly increasing, one more knot than segments, >= 1 segment
///  - adjacent segments meet with position/velocity/acceleration gaps <= 1e-9
///  - if terminal_hover, the final velocity and acceleration are ~0
struct TrajectorySpline {
  int owner = -1;
  std::uint64_t seq = 0;
  std::vector<double> knots;
  std::vector<CubicSegment> segments;
  bool terminal_hover = true;

  double start_time() const { return knots.front(); }
  double end_time() const { return knots.back(); }
  double segment_duration(std::size_t i) const { return knots[i + 1] - knots[i]; }

  Vec3 start_position() const { return segments.front().ctrl[0]; }
  Vec3 end_position() const { return segments.back().ctrl[3]; }

  /// Index of the segment whose knot interval contains t (clamped to the
  /// first/last segment outside the domain).
  std::size_t segment_index(double t) const {
    if (t <= knots.front()) return 0;
    if (t >= knots.back()) return segments.size() - 1;
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    std::size_t i = static_cast<std::size_t>(it - knots.begin());
    return std::min(i - 1, segments.size() - 1);
  }
};

namespace detail {

/// de Casteljau evaluation of a cubic given by 4 control points at local
/// parameter u in [0,1].
inline Vec3 decasteljau3(const std::array<Vec3, 4>& p, double u) {
  Vec3 a = p[0] + u * (p[1] - p[0]);
  Vec3 b = p[1] + u * (p[2] - p[1]);
  Vec3 c = p[2] + u * (p[3] - p[2]);
  Vec3 d = a + u * (b - a);
  Vec3 e = b + u * (c - b);
  return d + u * (e - d);
}

inline Vec3 decasteljau2(const std::array<Vec3, 3>& p, double u) {
  Vec3 a = p[0] + u * (p[1] - p[0]);
  Vec3 b = p[1] + u * (p[2] - p[1]);
  return a + u * (b - a);
}

}  // namespace detail

/// Control points of the order-th derivative of a segment, already scaled by
/// the segment duration h. The derivative of a degree-n Bezier has control
/// points n*(P[i+1]-P[i]); each derivative order divides by h once.
inline std::vector<Vec3> derivative_ctrl(const CubicSegment& seg, double h, int order) {
  std::vector<Vec3> pts(seg.ctrl.begin(), seg.ctrl.end());
  int degree = 3;
  for (int k = 0; k < order; ++k) {
    std::vector<Vec3> next(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      next[i] = static_cast<double>(degree) * (pts[i + 1] - pts[i]) / h;
    pts = std::move(next);
    --degree;
  }
  return pts;
}

/// Evaluate position (order 0) or a time derivative (order 1..3) at absolute
/// time t. Total by clamping: before the first knot the state at the first
/// knot is returned; past the last knot a terminal-hover spline returns the
/// final position with zero derivatives, otherwise the state at the last knot.
inline Vec3 evaluate(const TrajectorySpline& traj, double t, int order) {
  assert(order >= 0 && order <= 3);
  if (traj.terminal_hover && t >= traj.end_time()) {
    return order == 0 ? traj.end_position() : Vec3::Zero();
  }
  double tc = std::clamp(t, traj.start_time(), traj.end_time());
  std::size_t i = traj.segment_index(tc);
  double h = traj.segment_duration(i);
  double u = (tc - traj.knots[i]) / h;
  const auto& seg = traj.segments[i];
  switch (order) {
    case 0:
      return detail::decasteljau3(seg.ctrl, u);
    case 1: {
      auto d = derivative_ctrl(seg, h, 1);
      return detail::decasteljau2({d[0], d[1], d[2]}, u);
    }
    case 2: {
      auto d = derivative_ctrl(seg, h, 2);
      return d[0] + u * (d[1] - d[0]);
    }
    default: {
      auto d = derivative_ctrl(seg, h, 3);
      return d[0];
    }
  }
}

/// Euclidean norms of the position/velocity/acceleration differences of two
/// trajectories at the switch instant. A commit must keep all three ~0.
inline std::array<double, 3> continuity_gap(const TrajectorySpline& prev,
                                            const TrajectorySpline& next,
                                            double t_switch) {
  std::array<double, 3> gaps;
  for (int k = 0; k < 3; ++k)
    gaps[k] = (evaluate(prev, t_switch, k) - evaluate(next, t_switch, k)).norm();
  return gaps;
}

/// Per-axis dynamic limits (m/s, m/s^2, m/s^3), applied element-wise.
struct DynamicLimits {
  double v_max = 10.0;
  double a_max = 20.0;
  double j_max = 30.0;

  bool valid() const { return v_max > 0 && a_max > 0 && j_max > 0; }
  double bound(int order) const { return order == 1 ? v_max : order == 2 ? a_max : j_max; }
};

struct LimitViolation {
  std::size_t segment;
  int order;  // 1 velocity, 2 acceleration, 3 jerk
  int axis;
  double value;  // control-point bound that exceeded the limit
  double limit;
};

/// Conservative element-wise limit check via the derivative control points:
/// a Bezier derivative stays inside the hull of its control points on every
/// axis, so an empty result proves compliance everywhere in time.
inline std::vector<LimitViolation> check_dynamic_limits(const TrajectorySpline& traj,
                                                        const DynamicLimits& lim) {
  std::vector<LimitViolation> out;
  for (std::size_t s = 0; s < traj.segments.size(); ++s) {
    double h = traj.segment_duration(s);
    for (int order = 1; order <= 3; ++order) {
      auto pts = derivative_ctrl(traj.segments[s], h, order);
      for (int axis = 0; axis < 3; ++axis) {
        double worst = 0.0;
        for (const auto& p : pts) worst = std::max(worst, std::abs(p[axis]));
        if (worst > lim.bound(order))
          out.push_back({s, order, axis, worst, lim.bound(order)});
      }
    }
  }
  return out;
}

/// Constant-position spline (terminal hover, all derivatives zero).
inline TrajectorySpline hover_spline(int owner, std::uint64_t seq, const Vec3& pos,
                                     double t0, double duration = 1.0) {
  TrajectorySpline traj;
  traj.owner = owner;
  traj.seq = seq;
  traj.knots = {t0, t0 + duration};
  traj.segments.push_back(CubicSegment{{pos, pos, pos, pos}});
  traj.terminal_hover = true;
  return traj;
}

/// Restriction of a cubic to the local parameter window [a, b] in [0, 1],
/// via two de Casteljau subdivisions. Exact.
inline std::array<Vec3, 4> subsegment_ctrl(const std::array<Vec3, 4>& p, double a, double b) {
  auto split_right = [](const std::array<Vec3, 4>& q, double u) {
    // control points of the curve restricted to [u, 1]
    Vec3 q01 = q[0] + u * (q[1] - q[0]);
    Vec3 q12 = q[1] + u * (q[2] - q[1]);
    Vec3 q23 = q[2] + u * (q[3] - q[2]);
    Vec3 q012 = q01 + u * (q12 - q01);
    Vec3 q123 = q12 + u * (q23 - q12);
    Vec3 q0123 = q012 + u * (q123 - q012);
    return std::array<Vec3, 4>{q0123, q123, q23, q[3]};
  };
  auto split_left = [](const std::array<Vec3, 4>& q, double u) {
    Vec3 q01 = q[0] + u * (q[1] - q[0]);
    Vec3 q12 = q[1] + u * (q[2] - q[1]);
    Vec3 q23 = q[2] + u * (q[3] - q[2]);
    Vec3 q012 = q01 + u * (q12 - q01);
    Vec3 q123 = q12 + u * (q23 - q12);
    Vec3 q0123 = q012 + u * (q123 - q012);
    return std::array<Vec3, 4>{q[0], q01, q012, q0123};
  };
  if (a <= 0.0 && b >= 1.0) return p;
  auto right = a > 0.0 ? split_right(p, a) : p;
  if (b >= 1.0) return right;
  double bu = (b - a) / (1.0 - a);
  return split_left(right, bu);
}

/// Control points of `traj` restricted to [t0, t1]; the window must not
/// straddle a knot. Outside the domain the clamped hover state is used.
inline std::array<Vec3, 4> window_ctrl(const TrajectorySpline& traj, double t0, double t1) {
  if (t1 <= traj.start_time()) {
    Vec3 p = traj.start_position();
    return {p, p, p, p};
  }
  if (t0 >= traj.end_time()) {
    Vec3 p = traj.end_position();
    return {p, p, p, p};
  }
  std::size_t i = traj.segment_index(t0);
  double h = traj.segment_duration(i);
  double a = (t0 - traj.knots[i]) / h;
  double b = (t1 - traj.knots[i]) / h;
  return subsegment_ctrl(traj.segments[i].ctrl, std::clamp(a, 0.0, 1.0), std::clamp(b, 0.0, 1.0));
}

/// Drop everything before t_from, splitting the containing segment exactly.
inline TrajectorySpline trim_front(const TrajectorySpline& traj, double t_from) {
  if (t_from <= traj.start_time()) return traj;
  TrajectorySpline out;
  out.owner = traj.owner;
  out.seq = traj.seq;
  out.terminal_hover = traj.terminal_hover;
  if (t_from >= traj.end_time()) {
    // nothing left but the terminal state; keep a short hover there
    return hover_spline(traj.owner, traj.seq, traj.end_position(), t_from);
  }
  std::size_t i = traj.segment_index(t_from);
  double h = traj.segment_duration(i);
  double a = (t_from - traj.knots[i]) / h;
  out.knots.push_back(t_from);
  out.segments.push_back(CubicSegment{subsegment_ctrl(traj.segments[i].ctrl, a, 1.0)});
  for (std::size_t s = i + 1; s < traj.segments.size(); ++s) out.segments.push_back(traj.segments[s]);
  for (std::size_t k = i + 1; k < traj.knots.size(); ++k) out.knots.push_back(traj.knots[k]);
  return out;
}

/// Committed-trajectory composition: the previous plan up to t_switch, then
/// the candidate (whose first knot must equal t_switch). If the previous
/// plan ends before t_switch, the terminal hover bridges the gap. The result
/// is trimmed to start at t_from (the commit instant).
inline TrajectorySpline splice_commit(const TrajectorySpline& prev,
                                      const TrajectorySpline& candidate,
                                      double t_switch, double t_from) {
  assert(std::abs(candidate.start_time() - t_switch) < 1e-9);
  TrajectorySpline out;
  out.owner = candidate.owner;
  out.seq = candidate.seq;
  out.terminal_hover = candidate.terminal_hover;
  if (t_switch > prev.start_time()) {
    TrajectorySpline head = trim_front(prev, std::min(t_from, t_switch));
    double head_end = std::min(head.end_time(), t_switch);
    for (std::size_t s = 0; s < head.segments.size() && head.knots[s] < t_switch - 1e-12; ++s) {
      double h = head.segment_duration(s);
      double b = std::min(1.0, (t_switch - head.knots[s]) / h);
      out.knots.push_back(head.knots[s]);
      out.segments.push_back(CubicSegment{subsegment_ctrl(head.segments[s].ctrl, 0.0, b)});
      if (b < 1.0) break;
    }
    if (head_end < t_switch - 1e-12) {
      // previous plan ran out before the switch: hold the hover
      Vec3 p = head.end_position();
      out.knots.push_back(head_end);
      out.segments.push_back(CubicSegment{{p, p, p, p}});
    }
    // close the head at exactly t_switch
    out.knots.push_back(t_switch);
  } else {
    out.knots.push_back(t_switch);
  }
  // fix up: the loop above pushed one knot per segment start; the final
  // pushed knot is t_switch, matching candidate.start_time()
  for (std::size_t s = 0; s < candidate.segments.size(); ++s) {
    out.segments.push_back(candidate.segments[s]);
    out.knots.push_back(candidate.knots[s + 1]);
  }
  return out;
}

/// Structural + smoothness invariant check. Returns a description of the
/// first violated invariant, or nullopt when the spline is well-formed.
inline std::optional<std::string> validate(const TrajectorySpline& traj, double tol = 1e-9) {
  if (traj.segments.empty()) return "no segments";
  if (traj.knots.size() != traj.segments.size() + 1) return "knot/segment count mismatch";
  for (std::size_t i = 0; i + 1 < traj.knots.size(); ++i)
    if (!(traj.knots[i] < traj.knots[i + 1])) return "knots not strictly increasing";
  for (std::size_t i = 0; i + 1 < traj.segments.size(); ++i) {
    double t = traj.knots[i + 1];
    double hl = traj.segment_duration(i), hr = traj.segment_duration(i + 1);
    const auto& l = traj.segments[i];
    const auto& r = traj.segments[i + 1];
    if ((l.ctrl[3] - r.ctrl[0]).norm() > tol) return "position gap at knot " + std::to_string(t);
    Vec3 vl = 3.0 * (l.ctrl[3] - l.ctrl[2]) / hl;
    Vec3 vr = 3.0 * (r.ctrl[1] - r.ctrl[0]) / hr;
    if ((vl - vr).norm() > tol) return "velocity gap at knot " + std::to_string(t);
    Vec3 al = 6.0 * (l.ctrl[3] - 2.0 * l.ctrl[2] + l.ctrl[1]) / (hl * hl);
    Vec3 ar = 6.0 * (r.ctrl[2] - 2.0 * r.ctrl[1] + r.ctrl[0]) / (hr * hr);
    if ((al - ar).norm() > tol) return "acceleration gap at knot " + std::to_string(t);
  }
  if (traj.terminal_hover) {
    std::size_t s = traj.segments.size() - 1;
    double h = traj.segment_duration(s);
    const auto& seg = traj.segments[s];
    Vec3 v = 3.0 * (seg.ctrl[3] - seg.ctrl[2]) / h;
    Vec3 a = 6.0 * (seg.ctrl[3] - 2.0 * seg.ctrl[2] + seg.ctrl[1]) / (h * h);
    if (v.norm() > tol) return "terminal hover with nonzero velocity";
    if (a.norm() > tol) return "terminal hover with nonzero acceleration";
  }
  return std::nullopt;
}

}  // namespace rmader
