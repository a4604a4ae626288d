#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "rmader/geometry.hpp"
#include "rmader/simnet.hpp"
#include "rmader/trace.hpp"

namespace rmader {

/// Committed-trajectory timeline of every body in a run, reconstructed from
/// the trace alone. The executed state of an agent at time t is the
/// evaluation of the commit that was active at t.
struct ExecutedTimelines {
  struct Entry {
    double t_from;
    TrajectorySpline traj;
  };
  struct CommitRecord {
    int agent;
    double t;
    double t_switch;
  };

  std::map<int, std::vector<Entry>> agents;
  std::map<int, AgentBox> boxes;
  std::map<int, Vec3> starts, goals;
  std::map<int, double> delta_dc;
  std::map<int, std::string> variants;
  std::map<int, double> done_time;
  std::vector<std::pair<TrajectorySpline, AgentBox>> obstacles;
  std::vector<DelayRecord> deliveries;
  std::vector<CommitRecord> commits;
  std::map<int, AgentCounters> counters;
  double t_final = 0.0;
  double tick = 0.005;
  std::string end_status;

  static ExecutedTimelines from_trace(const Trace& trace) {
    ExecutedTimelines out;
    for (const auto& e : trace) {
      if (e.kind == "agent_init") {
        out.boxes[e.agent] = AgentBox{vec3_from_json(e.detail.at("box"))};
        out.starts[e.agent] = vec3_from_json(e.detail.at("start"));
        out.goals[e.agent] = vec3_from_json(e.detail.at("goal"));
        out.delta_dc[e.agent] = e.detail.at("delta_dc").get<double>();
        out.variants[e.agent] = e.detail.at("variant").get<std::string>();
        out.agents[e.agent].push_back({0.0, spline_from_json(e.detail.at("initial_comm"))});
      } else if (e.kind == "obstacle_init") {
        out.obstacles.push_back(
            {spline_from_json(e.detail.at("traj")), AgentBox{vec3_from_json(e.detail.at("box"))}});
      } else if (e.kind == "commit") {
        out.agents[e.agent].push_back({e.t, spline_from_json(e.detail.at("traj"))});
        out.commits.push_back({e.agent, e.t, e.detail.at("t_switch").get<double>()});
        ++out.counters[e.agent].commits;
      } else if (e.kind == "delivery") {
        out.deliveries.push_back({e.detail.at("sender").get<int>(), e.agent,
                                  e.detail.at("seq").get<std::uint64_t>(),
                                  e.detail.at("t_pub").get<double>(), e.t});
      } else if (e.kind == "reject") {
        ++out.counters[e.agent].rejections;
      } else if (e.kind == "dc_abort") {
        ++out.counters[e.agent].dc_aborts;
      } else if (e.kind == "plan_infeasible") {
        ++out.counters[e.agent].infeasible;
      } else if (e.kind == "done") {
        out.done_time[e.agent] = e.t;
      } else if (e.kind == "scenario_end") {
        out.t_final = e.t;
        out.end_status = e.detail.at("status").get<std::string>();
      } else if (e.kind == "run_header") {
        out.tick = e.detail.value("tick", 0.005);
      }
    }
    return out;
  }

  Vec3 eval(int agent, double t, int order) const {
    const auto& entries = agents.at(agent);
    std::size_t i = entries.size();
    while (i > 1 && entries[i - 1].t_from > t + 1e-12) --i;
    return evaluate(entries[i - 1].traj, t, order);
  }
};

struct AgentMetrics {
  int id = -1;
  bool done = false;
  bool deadlocked = false;
  double travel_time = 0.0;
  double travel_distance = 0.0;
  int num_stops = 0;
  double stop_time = 0.0;
  double jerk_integral = 0.0;
  AgentCounters counters;
};

inline json agent_metrics_to_json(const AgentMetrics& m) {
  return json{{"id", m.id},
              {"done", m.done},
              {"deadlocked", m.deadlocked},
              {"travel_time", m.travel_time},
              {"travel_distance", m.travel_distance},
              {"num_stops", m.num_stops},
              {"stop_time", m.stop_time},
              {"jerk_integral", m.jerk_integral},
              {"commits", m.counters.commits},
              {"rejections", m.counters.rejections},
              {"dc_aborts", m.counters.dc_aborts},
              {"infeasible", m.counters.infeasible}};
}

inline AgentMetrics agent_metrics_from_json(const json& j) {
  AgentMetrics m;
  m.id = j.at("id").get<int>();
  m.done = j.at("done").get<bool>();
  m.deadlocked = j.at("deadlocked").get<bool>();
  m.travel_time = j.at("travel_time").get<double>();
  m.travel_distance = j.at("travel_distance").get<double>();
  m.num_stops = j.at("num_stops").get<int>();
  m.stop_time = j.at("stop_time").get<double>();
  m.jerk_integral = j.at("jerk_integral").get<double>();
  m.counters.commits = j.at("commits").get<std::uint64_t>();
  m.counters.rejections = j.at("rejections").get<std::uint64_t>();
  m.counters.dc_aborts = j.at("dc_aborts").get<std::uint64_t>();
  m.counters.infeasible = j.at("infeasible").get<std::uint64_t>();
  return m;
}

struct MetricsReport {
  bool collision_free = true;
  bool deadlock = false;
  std::vector<AgentMetrics> agents;
  std::map<int, std::uint64_t> delay_histogram;  // 5 ms bins: bin -> count
  double max_delay = 0.0;
  std::string end_status;
  double t_final = 0.0;

  json to_json() const {
    json j;
    j["collision_free"] = collision_free;
    j["deadlock"] = deadlock;
    j["max_delay"] = max_delay;
    j["end_status"] = end_status;
    j["t_final"] = t_final;
    j["agents"] = json::array();
    for (const auto& a : agents) j["agents"].push_back(agent_metrics_to_json(a));
    j["delay_histogram"] = json::object();
    for (const auto& [bin, count] : delay_histogram)
      j["delay_histogram"][std::to_string(bin)] = count;
    return j;
  }

  static MetricsReport from_json(const json& j) {
    MetricsReport r;
    r.collision_free = j.at("collision_free").get<bool>();
    r.deadlock = j.at("deadlock").get<bool>();
    r.max_delay = j.at("max_delay").get<double>();
    r.end_status = j.at("end_status").get<std::string>();
    r.t_final = j.at("t_final").get<double>();
    for (const auto& a : j.at("agents")) r.agents.push_back(agent_metrics_from_json(a));
    for (const auto& [key, val] : j.at("delay_histogram").items())
      r.delay_histogram[std::stoi(key)] = val.get<std::uint64_t>();
    return r;
  }
};

inline constexpr double kMetricsSampleDt = 0.01;  // 10 ms collision/metrics sampling
inline constexpr double kStopSpeed = 0.05;        // m/s, sustained 0.5 s counts as a stop
inline constexpr double kStopMinDuration = 0.5;
inline constexpr double kDeadlockSpeed = 0.01;  // m/s over the final 10 s
inline constexpr double kDeadlockWindow = 10.0;

/// Campaign statistics for one finished run, derived entirely from the trace
/// (collision_free re-checks the executed timelines offline at 10 ms).
inline MetricsReport compute_metrics(const Trace& trace) {
  auto world = ExecutedTimelines::from_trace(trace);
  MetricsReport report;
  report.end_status = world.end_status;
  report.t_final = world.t_final;

  double t_final = world.t_final;
  std::vector<int> ids;
  for (const auto& [id, entries] : world.agents) ids.push_back(id);

  // offline collision re-check over the whole run
  for (double t = 0.0; t <= t_final + 1e-9 && report.collision_free; t += kMetricsSampleDt) {
    std::map<int, Vec3> pos;
    for (int id : ids) pos[id] = world.eval(id, t, 0);
    for (std::size_t i = 0; i < ids.size() && report.collision_free; ++i) {
      for (std::size_t k = i + 1; k < ids.size(); ++k) {
        AgentBox combined = AgentBox::combined(world.boxes.at(ids[i]), world.boxes.at(ids[k]));
        if (box_overlap(pos[ids[i]] - pos[ids[k]], combined)) {
          report.collision_free = false;
          break;
        }
      }
      for (const auto& [ob, ob_box] : world.obstacles) {
        AgentBox combined = AgentBox::combined(world.boxes.at(ids[i]), ob_box);
        if (box_overlap(pos[ids[i]] - evaluate(ob, t, 0), combined)) {
          report.collision_free = false;
          break;
        }
      }
    }
  }

  for (int id : ids) {
    AgentMetrics m;
    m.id = id;
    m.done = world.done_time.count(id) > 0;
    m.counters = world.counters.count(id) ? world.counters.at(id) : AgentCounters{};
    double t_done = m.done ? world.done_time.at(id) : t_final;
    m.travel_time = t_done;

    bool moving_seen = false;
    double stop_started = -1.0;
    auto close_stop = [&](double t_at) {
      if (stop_started >= 0.0 && t_at - stop_started >= kStopMinDuration) {
        ++m.num_stops;
        m.stop_time += t_at - stop_started;
      }
      stop_started = -1.0;
    };
    for (double t = 0.0; t < t_done; t += kMetricsSampleDt) {
      double speed = world.eval(id, t + 0.5 * kMetricsSampleDt, 1).norm();
      double jerk = world.eval(id, t + 0.5 * kMetricsSampleDt, 3).norm();
      double dt = std::min(kMetricsSampleDt, t_done - t);
      m.travel_distance += speed * dt;
      m.jerk_integral += jerk * jerk * dt;
      if (!moving_seen) {
        moving_seen = speed >= kStopSpeed;
        continue;
      }
      if (speed < kStopSpeed) {
        if (stop_started < 0.0) stop_started = t;
      } else {
        close_stop(t);
      }
    }
    close_stop(t_done);

    if (!m.done) {
      double w0 = std::max(0.0, t_final - kDeadlockWindow);
      bool crawling = true;
      for (double t = w0; t <= t_final && crawling; t += kMetricsSampleDt)
        crawling = world.eval(id, t, 1).norm() < kDeadlockSpeed;
      m.deadlocked = crawling;
      if (crawling) report.deadlock = true;
    }
    report.agents.push_back(m);
  }

  for (const auto& d : world.deliveries) {
    report.max_delay = std::max(report.max_delay, d.delta());
    report.delay_histogram[static_cast<int>(d.delta() / 0.005)]++;
  }
  return report;
}

}  // namespace rmader
