#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rmader/trajectory.hpp"

namespace rmader {

/// Randomized trefoil ((2,3)-torus-knot) obstacle trajectory parameters.
struct TrefoilParams {
  Vec3 center{0, 0, 0};
  Vec3 scale{1, 1, 1};
  double angular_rate = 0.5;  // rad/s
  double phase = 0.0;

  bool valid() const {
    return scale.x() > 0 && scale.y() > 0 && scale.z() > 0 && angular_rate != 0.0;
  }
  double period() const { return 2.0 * std::numbers::pi / std::abs(angular_rate); }
};

/// Analytic trefoil state: position (order 0), velocity (1), acceleration (2)
/// of center + scale .* (sin t + 2 sin 2t, cos t - 2 cos 2t, -sin 3t) with
/// t := angular_rate * time + phase.
inline Vec3 trefoil_position(const TrefoilParams& p, double t, int order) {
  double th = p.angular_rate * t + p.phase;
  double w = p.angular_rate;
  Vec3 raw;
  switch (order) {
    case 0:
      raw = {std::sin(th) + 2.0 * std::sin(2.0 * th), std::cos(th) - 2.0 * std::cos(2.0 * th),
             -std::sin(3.0 * th)};
      return p.center + p.scale.cwiseProduct(raw);
    case 1:
      raw = {w * (std::cos(th) + 4.0 * std::cos(2.0 * th)),
             w * (-std::sin(th) + 4.0 * std::sin(2.0 * th)), -3.0 * w * std::cos(3.0 * th)};
      return p.scale.cwiseProduct(raw);
    case 2:
      raw = {w * w * (-std::sin(th) - 8.0 * std::sin(2.0 * th)),
             w * w * (-std::cos(th) + 8.0 * std::cos(2.0 * th)), 9.0 * w * w * std::sin(3.0 * th)};
      return p.scale.cwiseProduct(raw);
    default:
      throw std::invalid_argument("trefoil_position: order must be 0..2");
  }
}

/// Fit the trefoil over [t0, t1] as a C2 interpolating cubic spline with
/// n_segments uniform pieces: positions sampled at the knots, end slopes
/// clamped to the analytic velocity, interior slopes solved from the
/// tridiagonal C2 continuity system, then each Hermite piece converted to
/// Bezier control points. Endpoints interpolate exactly; with >= 32 segments
/// per trefoil period the position error stays well under 1 cm.
inline TrajectorySpline obstacle_as_spline(const TrefoilParams& p, double t0, double t1,
                                           int n_segments, int owner = -1) {
  if (!(t1 > t0)) throw std::invalid_argument("obstacle_as_spline: degenerate horizon");
  if (n_segments < 1) throw std::invalid_argument("obstacle_as_spline: n_segments < 1");

  int n = n_segments;
  double h = (t1 - t0) / n;
  std::vector<Vec3> pos(n + 1);
  for (int i = 0; i <= n; ++i) pos[i] = trefoil_position(p, t0 + i * h, 0);

  // clamped cubic spline: solve for knot velocities m[0..n] with
  // m[0], m[n] fixed and m[i-1] + 4 m[i] + m[i+1] = 3 (p[i+1]-p[i-1]) / h
  std::vector<Vec3> m(n + 1);
  m[0] = trefoil_position(p, t0, 1);
  m[n] = trefoil_position(p, t1, 1);
  if (n > 1) {
    std::vector<double> diag(n + 1, 4.0), upper(n + 1, 1.0);
    std::vector<Vec3> rhs(n + 1);
    for (int i = 1; i < n; ++i) rhs[i] = 3.0 * (pos[i + 1] - pos[i - 1]) / h;
    rhs[1] -= m[0];
    rhs[n - 1] -= m[n];
    // Thomas algorithm over i = 1..n-1
    for (int i = 2; i < n; ++i) {
      double f = 1.0 / diag[i - 1];
      diag[i] -= f * upper[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for (int i = n - 2; i >= 1; --i) m[i] = (rhs[i] - m[i + 1]) / diag[i];
  }

  TrajectorySpline traj;
  traj.owner = owner;
  traj.seq = 0;
  traj.terminal_hover = false;
  traj.knots.resize(n + 1);
  traj.segments.resize(n);
  for (int i = 0; i <= n; ++i) traj.knots[i] = t0 + i * h;
  for (int i = 0; i < n; ++i) {
    // Hermite (p0, v0, p1, v1) -> Bezier control points
    traj.segments[i].ctrl = {pos[i], pos[i] + m[i] * h / 3.0, pos[i + 1] - m[i + 1] * h / 3.0,
                             pos[i + 1]};
  }
  return traj;
}

/// Segment count giving at least `per_period` pieces per trefoil period over
/// the horizon (with a floor for short horizons).
inline int trefoil_fit_segments(const TrefoilParams& p, double t0, double t1,
                                int per_period = 32) {
  double periods = (t1 - t0) / p.period();
  return std::max(8, static_cast<int>(std::ceil(per_period * periods)));
}

}  // namespace rmader
