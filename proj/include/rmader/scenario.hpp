#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rmader/simnet.hpp"
#include "rmader/trefoil.hpp"

namespace rmader {

/// Obstacle randomization ranges (trefoil parameters are drawn per obstacle
/// from the scenario seed). Defaults keep the swept volume inside the agent
/// circle so parked agents can never be run over.
struct ObstacleConfig {
  int count = 0;
  AgentBox box{{0.2, 0.2, 0.2}};
  Vec3 center_min{-1.0, -1.0, 0.6};
  Vec3 center_max{1.0, 1.0, 1.4};
  double scale_min = 0.6;
  double scale_max = 1.0;
  double rate_min = 0.3;
  double rate_max = 0.8;
};

struct ScenarioConfig {
  enum class Layout { kCircleExchange, kExplicit };

  Layout layout = Layout::kCircleExchange;
  int n_agents = 6;
  double radius = 5.0;
  double altitude = 1.0;
  std::vector<Vec3> starts;  // explicit layout
  std::vector<Vec3> goals;

  Variant variant = Variant::kRmader;
  std::vector<Variant> variant_per_agent;  // optional override

  double delta_dc = 0.075;
  double tick = 0.005;
  double t_end = 30.0;
  std::uint64_t seed = 1;
  double check_latency = 0.0;
  double goal_tol = 0.1;
  double horizon = 4.0;
  double stagger_max = 0.1;  // agents start within [0, stagger_max)

  AgentBox agent_box{{0.4, 0.4, 0.5}};
  DynamicLimits limits;
  DelayModel delay;
  PlannerLatency latency;
  ObstacleConfig obstacles;
  double obstacle_horizon_margin = 6.0;

  std::string name = "scenario";
};

/// Field-by-field validation; returns one message per violated constraint.
inline std::vector<std::string> validate(const ScenarioConfig& cfg) {
  std::vector<std::string> errors;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  require(cfg.delta_dc > 0, "delta_dc: must be > 0");
  require(cfg.t_end > 0, "t_end: must be > 0");
  require(cfg.tick > 0, "tick: must be > 0");
  require(cfg.n_agents >= 1, "agents: must be >= 1");
  require(cfg.agent_box.valid(), "agent_box: all half extents must be > 0");
  require(cfg.limits.valid(), "limits: v_max/a_max/j_max must be > 0");
  require(cfg.goal_tol > 0, "goal_tolerance: must be > 0");
  require(cfg.horizon > 0, "horizon: must be > 0");
  require(cfg.check_latency >= 0, "check_latency: must be >= 0");
  require(cfg.stagger_max >= 0, "stagger_max: must be >= 0");
  if (cfg.layout == ScenarioConfig::Layout::kExplicit) {
    require(static_cast<int>(cfg.starts.size()) == cfg.n_agents,
            "starts: need one entry per agent");
    require(static_cast<int>(cfg.goals.size()) == cfg.n_agents, "goals: need one entry per agent");
  } else {
    require(cfg.radius > 0, "radius: must be > 0");
  }
  if (!cfg.variant_per_agent.empty())
    require(static_cast<int>(cfg.variant_per_agent.size()) == cfg.n_agents,
            "variant_per_agent: need one entry per agent");
  if (cfg.obstacles.count > 0) {
    require(cfg.obstacles.box.valid(), "obstacles.box: all half extents must be > 0");
    require(cfg.obstacles.scale_min > 0 && cfg.obstacles.scale_max >= cfg.obstacles.scale_min,
            "obstacles.scale: need 0 < min <= max");
    require(cfg.obstacles.rate_min > 0 && cfg.obstacles.rate_max >= cfg.obstacles.rate_min,
            "obstacles.rate: need 0 < min <= max");
  }
  require(cfg.delay.introd >= 0, "delay.introd: must be >= 0");
  require(cfg.delay.jitter_max >= 0, "delay.jitter_max: must be >= 0");
  return errors;
}

inline std::pair<std::vector<Vec3>, std::vector<Vec3>> scenario_layout(const ScenarioConfig& cfg) {
  if (cfg.layout == ScenarioConfig::Layout::kExplicit) return {cfg.starts, cfg.goals};
  std::vector<Vec3> starts, goals;
  for (int i = 0; i < cfg.n_agents; ++i) {
    double th = 2.0 * std::numbers::pi * i / cfg.n_agents;
    Vec3 p{cfg.radius * std::cos(th), cfg.radius * std::sin(th), cfg.altitude};
    Vec3 g{-p.x(), -p.y(), cfg.altitude};  // exchange positions diagonally
    starts.push_back(p);
    goals.push_back(g);
  }
  return {starts, goals};
}

inline std::vector<TrefoilParams> scenario_obstacles(const ScenarioConfig& cfg) {
  std::vector<TrefoilParams> out;
  Rng rng = Rng::stream(cfg.seed, 42);
  for (int i = 0; i < cfg.obstacles.count; ++i) {
    TrefoilParams p;
    for (int k = 0; k < 3; ++k)
      p.center[k] = rng.uniform(cfg.obstacles.center_min[k], cfg.obstacles.center_max[k]);
    for (int k = 0; k < 3; ++k)
      p.scale[k] = rng.uniform(cfg.obstacles.scale_min, cfg.obstacles.scale_max);
    p.angular_rate = rng.uniform(cfg.obstacles.rate_min, cfg.obstacles.rate_max);
    p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.push_back(p);
  }
  return out;
}

/// Build a ready-to-run engine from a validated config.
inline Engine build_engine(const ScenarioConfig& cfg) {
  Engine engine(cfg.tick, cfg.seed);
  engine.set_delay_model(cfg.delay);
  engine.set_planner_latency(cfg.latency);

  json header;
  header["scenario"] = cfg.name;
  header["agents"] = cfg.n_agents;
  header["variant"] = variant_name(cfg.variant);
  header["delta_dc"] = cfg.delta_dc;
  header["delay_introd"] = cfg.delay.introd;
  engine.set_header(header);

  auto [starts, goals] = scenario_layout(cfg);
  Rng stagger_rng = Rng::stream(cfg.seed, 7);
  for (int i = 0; i < cfg.n_agents; ++i) {
    AgentConfig a;
    a.id = i;
    a.variant = cfg.variant_per_agent.empty() ? cfg.variant : cfg.variant_per_agent[i];
    a.start = starts[i];
    a.goal = goals[i];
    a.box = cfg.agent_box;
    a.peer_box = cfg.agent_box;
    a.limits = cfg.limits;
    a.delta_dc = cfg.delta_dc;
    a.tick = cfg.tick;
    a.check_latency = cfg.check_latency;
    a.goal_tol = cfg.goal_tol;
    a.horizon = cfg.horizon;
    double offset = cfg.stagger_max > 0 ? stagger_rng.uniform(0.0, cfg.stagger_max) : 0.0;
    offset = std::round(offset / cfg.tick) * cfg.tick;  // keep ticks on a grid
    engine.add_agent(a, offset);
  }

  auto trefoils = scenario_obstacles(cfg);
  for (std::size_t i = 0; i < trefoils.size(); ++i) {
    double t1 = cfg.t_end + cfg.obstacle_horizon_margin;
    int segs = trefoil_fit_segments(trefoils[i], 0.0, t1);
    TrajectorySpline spline =
        obstacle_as_spline(trefoils[i], 0.0, t1, segs, 1000 + static_cast<int>(i));
    engine.add_obstacle(spline, cfg.obstacles.box);
  }
  return engine;
}

}  // namespace rmader
