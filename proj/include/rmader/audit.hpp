#pragma once

#include <set>
#include <string>
#include <vector>

#include "rmader/collision.hpp"
#include "rmader/metrics.hpp"

namespace rmader {

struct CollisionFinding {
  double t;
  int a;
  int b;  // >= 1000 for obstacles
};

struct HullFinding {
  double t0, t1;  // co-committed interval that failed the hull check
  int a;
  int b;
  double first_overlap_time;
};

/// Independent offline auditor for a finished run. Reconstructs every
/// committed-trajectory timeline from the trace and re-checks:
///  - box overlap of the executed states at 10 ms sampling (ground truth),
///  - the conservative hull check over every co-committed interval,
///  - the delay-bound monitor (delta_actual vs the receiver's delta_dc),
///  - third-order continuity of every commit transition.
/// For delay-check variants a clean monitor must imply a clean sampled audit.
struct AuditReport {
  std::vector<CollisionFinding> sampled;  // first finding per body pair
  std::vector<HullFinding> hull;
  std::vector<MonitorViolation> monitor;
  double max_commit_gap = 0.0;
  bool continuity_ok = true;
  bool guarantee_applicable = true;  // every agent runs a Delay Check variant
  bool hull_checked = false;

  bool sampled_clean() const { return sampled.empty(); }
  bool monitor_clean() const { return monitor.empty(); }

  json to_json() const {
    json j;
    j["sampled_clean"] = sampled_clean();
    j["monitor_clean"] = monitor_clean();
    j["continuity_ok"] = continuity_ok;
    j["max_commit_gap"] = max_commit_gap;
    j["guarantee_applicable"] = guarantee_applicable;
    j["hull_checked"] = hull_checked;
    j["sampled"] = json::array();
    for (const auto& f : sampled) j["sampled"].push_back({{"t", f.t}, {"a", f.a}, {"b", f.b}});
    j["hull"] = json::array();
    for (const auto& f : hull)
      j["hull"].push_back({{"t0", f.t0},
                           {"t1", f.t1},
                           {"a", f.a},
                           {"b", f.b},
                           {"first_overlap_time", f.first_overlap_time}});
    j["monitor"] = json::array();
    for (const auto& v : monitor)
      j["monitor"].push_back({{"sender", v.record.sender},
                              {"receiver", v.record.receiver},
                              {"seq", v.record.seq},
                              {"delta", v.record.delta()},
                              {"bound", v.bound}});
    return j;
  }
};

inline AuditReport audit_trace(const Trace& trace, bool with_hull = false) {
  auto world = ExecutedTimelines::from_trace(trace);
  AuditReport report;

  std::vector<int> ids;
  for (const auto& [id, entries] : world.agents) ids.push_back(id);
  for (const auto& [id, variant] : world.variants)
    if (variant == "mader_baseline") report.guarantee_applicable = false;

  // ground truth: sampled box overlap between executed states
  std::set<std::pair<int, int>> reported;
  for (double t = 0.0; t <= world.t_final + 1e-9; t += kMetricsSampleDt) {
    std::map<int, Vec3> pos;
    for (int id : ids) pos[id] = world.eval(id, t, 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t k = i + 1; k < ids.size(); ++k) {
        AgentBox combined = AgentBox::combined(world.boxes.at(ids[i]), world.boxes.at(ids[k]));
        if (box_overlap(pos[ids[i]] - pos[ids[k]], combined) &&
            reported.insert({ids[i], ids[k]}).second)
          report.sampled.push_back({t, ids[i], ids[k]});
      }
      for (std::size_t o = 0; o < world.obstacles.size(); ++o) {
        const auto& [ob, ob_box] = world.obstacles[o];
        AgentBox combined = AgentBox::combined(world.boxes.at(ids[i]), ob_box);
        if (box_overlap(pos[ids[i]] - evaluate(ob, t, 0), combined) &&
            reported.insert({ids[i], ob.owner}).second)
          report.sampled.push_back({t, ids[i], ob.owner});
      }
    }
  }

  // conservative hull re-check over every co-committed interval
  if (with_hull) {
    report.hull_checked = true;
    auto entries_of = [&](int id) -> const std::vector<ExecutedTimelines::Entry>& {
      return world.agents.at(id);
    };
    auto check_pairwise = [&](int ida, int idb, const TrajectorySpline& tb, const AgentBox& bb) {
      const auto& ea = entries_of(ida);
      for (std::size_t i = 0; i < ea.size(); ++i) {
        double w0 = ea[i].t_from;
        double w1 = std::min(i + 1 < ea.size() ? ea[i + 1].t_from : world.t_final, world.t_final);
        if (w1 <= w0 + 1e-9) continue;
        ConflictReport r = check_pair(ea[i].traj, tb, world.boxes.at(ida), bb, w0, w1);
        if (r.in_conflict)
          report.hull.push_back({w0, w1, ida, idb, r.first_overlap_time.value_or(w0)});
      }
    };
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t k = i + 1; k < ids.size(); ++k) {
        const auto& eb = entries_of(ids[k]);
        for (std::size_t m = 0; m < eb.size(); ++m) {
          double b0 = eb[m].t_from;
          double b1 = m + 1 < eb.size() ? eb[m + 1].t_from : world.t_final;
          if (b1 <= b0 + 1e-9) continue;
          const auto& ea = entries_of(ids[i]);
          for (std::size_t n = 0; n < ea.size(); ++n) {
            double a0 = ea[n].t_from;
            double a1 = n + 1 < ea.size() ? ea[n + 1].t_from : world.t_final;
            double w0 = std::max(a0, b0);
            double w1 = std::min(a1, b1);
            if (w1 <= w0 + 1e-9) continue;
            ConflictReport r = check_pair(ea[n].traj, eb[m].traj, world.boxes.at(ids[i]),
                                          world.boxes.at(ids[k]), w0, w1);
            if (r.in_conflict)
              report.hull.push_back({w0, w1, ids[i], ids[k], r.first_overlap_time.value_or(w0)});
          }
        }
      }
      for (const auto& [ob, ob_box] : world.obstacles) check_pairwise(ids[i], ob.owner, ob, ob_box);
    }
  }

  // delay-bound monitor
  DelayLedger ledger;
  for (const auto& d : world.deliveries) ledger.add(d);
  report.monitor = guarantee_monitor(ledger, world.delta_dc);

  // continuity of every commit transition, recomputed from the stored splines
  for (const auto& c : world.commits) {
    const auto& entries = world.agents.at(c.agent);
    const TrajectorySpline* prev = nullptr;
    const TrajectorySpline* next = nullptr;
    for (std::size_t i = 1; i < entries.size(); ++i) {
      if (std::abs(entries[i].t_from - c.t) < 1e-12) {
        prev = &entries[i - 1].traj;
        next = &entries[i].traj;
        break;
      }
    }
    if (!prev) continue;
    auto gaps = continuity_gap(*prev, *next, c.t_switch);
    for (double g : gaps) report.max_commit_gap = std::max(report.max_commit_gap, g);
  }
  report.continuity_ok = report.max_commit_gap <= 1e-9;
  return report;
}

}  // namespace rmader
