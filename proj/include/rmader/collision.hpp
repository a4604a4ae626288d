#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rmader/geometry.hpp"
#include "rmader/trajectory.hpp"

namespace rmader {

/// Outcome of a pairwise conflict check. min_margin is signed under the box
/// metric: negative means penetration, and in_conflict <=> min_margin < 0.
/// conflicting_seq identifies which stored trajectory of the named peer
/// caused a store-check conflict.
struct ConflictReport {
  bool in_conflict = false;
  std::optional<double> first_overlap_time;
  double min_margin = std::numeric_limits<double>::infinity();
  std::pair<int, int> pair{-1, -1};
  std::optional<std::uint64_t> conflicting_seq;
};

/// Time resolution below which an unresolved window is declared a conflict
/// (safe direction; below the simulator tick).
inline constexpr double kBisectionFloor = 1e-3;

namespace detail {

/// Lower bound on the box-metric margin between two cubics that share the
/// same time window. Because both are Beziers of the same degree on the same
/// parameter, their difference is the Bezier with control points A[j]-B[j];
/// per axis the curve stays inside the hull of those values, which is what
/// makes a nonnegative result a proof of separation for the whole window.
inline double hull_margin_bound(const std::array<Vec3, 4>& a, const std::array<Vec3, 4>& b,
                                const AgentBox& combined) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < 4; ++j) {
      double d = a[j][i] - b[j][i];
      mn = std::min(mn, d);
      mx = std::max(mx, d);
    }
    double lb = mn > 0 ? mn : (mx < 0 ? -mx : 0.0);
    best = std::max(best, lb - combined.half[i]);
  }
  return best;
}

/// Whole-domain control-point bounds, extended with the clamped hover states.
/// Used as a cheap reject before any window work.
inline void spline_bounds(const TrajectorySpline& t, Vec3& lo, Vec3& hi) {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const auto& seg : t.segments)
    for (const auto& p : seg.ctrl) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
}

}  // namespace detail

/// Conservative separation test for two control-point sets covering the same
/// time window, under the combined (Minkowski) box. Returns true only when
/// no box overlap can occur anywhere in the window.
inline bool segment_separated(const std::array<Vec3, 4>& ctrl_a,
                              const std::array<Vec3, 4>& ctrl_b,
                              const AgentBox& combined) {
  return detail::hull_margin_bound(ctrl_a, ctrl_b, combined) >= 0.0;
}

/// Continuous-time conflict check between two trajectories over [t0, t1].
/// Both splines are refined to a common knot set (clamped hover outside
/// their domains); windows that the hull test cannot prove separated are
/// bisected down to kBisectionFloor and then declared conflicting.
inline ConflictReport check_pair(const TrajectorySpline& a, const TrajectorySpline& b,
                                 const AgentBox& box_a, const AgentBox& box_b,
                                 double t0, double t1) {
  if (!(t0 < t1)) throw std::invalid_argument("check_pair: degenerate window");
  AgentBox combined = AgentBox::combined(box_a, box_b);
  ConflictReport report;
  report.pair = {a.owner, b.owner};

  Vec3 lo_a, hi_a, lo_b, hi_b;
  detail::spline_bounds(a, lo_a, hi_a);
  detail::spline_bounds(b, lo_b, hi_b);
  double coarse = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    double gap = std::max(lo_a[i] - hi_b[i], lo_b[i] - hi_a[i]) - combined.half[i];
    coarse = std::max(coarse, gap);
  }
  if (coarse >= 0.0) {
    report.min_margin = coarse;
    return report;  // hulls of the whole splines already separated
  }

  // common refinement: window bounds plus every knot of either spline
  std::vector<double> cuts{t0, t1};
  for (const auto* t : {&a, &b})
    for (double k : t->knots)
      if (k > t0 && k < t1) cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double x, double y) { return std::abs(x - y) < 1e-12; }),
             cuts.end());

  report.min_margin = std::numeric_limits<double>::infinity();

  // depth-first, left to right, so the first declared conflict is earliest
  auto resolve = [&](auto&& self, double w0, double w1) -> bool {
    auto ca = window_ctrl(a, w0, w1);
    auto cb = window_ctrl(b, w0, w1);
    double bound = detail::hull_margin_bound(ca, cb, combined);
    if (bound >= 0.0) {
      report.min_margin = std::min(report.min_margin, bound);
      return false;
    }
    if (w1 - w0 <= kBisectionFloor) {
      if (!report.in_conflict) {
        report.in_conflict = true;
        report.first_overlap_time = w0;
      }
      double sampled = std::numeric_limits<double>::infinity();
      for (int s = 0; s <= 10; ++s) {
        double t = w0 + (w1 - w0) * s / 10.0;
        sampled = std::min(sampled, box_margin(evaluate(a, t, 0) - evaluate(b, t, 0), combined));
      }
      report.min_margin = std::min(report.min_margin, std::min(bound, sampled));
      return true;
    }
    double mid = 0.5 * (w0 + w1);
    if (self(self, w0, mid)) return true;
    return self(self, mid, w1);
  };

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (resolve(resolve, cuts[i], cuts[i + 1])) break;
  }
  return report;
}

/// A constraint held in an agent's store: a peer committed/candidate
/// trajectory or an obstacle trajectory, with the box to inflate it by.
struct StoreEntryRef {
  const TrajectorySpline* traj;
  AgentBox box;
};

/// Check a candidate against every stored constraint. Returns the first
/// conflict found (deterministic store order) or a clean report carrying the
/// global minimum margin (+infinity for an empty store).
///
/// Each pairwise window is clipped to start no earlier than either
/// trajectory's own domain: before a trajectory's first knot the body is
/// still flying its previously committed trajectory, which is a separate
/// store entry (or the peer's separately checked constraint), so the
/// clamped-hover prefix would only add phantom conflicts at points neither
/// body occupies at those times.
inline ConflictReport check_against_store(const TrajectorySpline& candidate,
                                          const std::vector<StoreEntryRef>& entries,
                                          const AgentBox& own_box, double t0, double t1) {
  ConflictReport best;
  best.pair = {candidate.owner, -1};
  for (const auto& e : entries) {
    double w0 = std::max({t0, candidate.start_time(), e.traj->start_time()});
    if (w0 >= t1) continue;
    ConflictReport r = check_pair(candidate, *e.traj, own_box, e.box, w0, t1);
    if (r.in_conflict) {
      r.conflicting_seq = e.traj->seq;
      return r;
    }
    if (r.min_margin < best.min_margin) {
      best.min_margin = r.min_margin;
      best.pair = r.pair;
    }
  }
  return best;
}

}  // namespace rmader
