#include <catch2/catch_amalgamated.hpp>

#include "rmader/audit.hpp"
#include "rmader/campaign.hpp"
#include "rmader/scenario.hpp"

using namespace rmader;

TEST_CASE("config validation names the offending fields") {
  ScenarioConfig cfg;
  cfg.delta_dc = 0.0;
  cfg.t_end = -1.0;
  cfg.layout = ScenarioConfig::Layout::kExplicit;
  cfg.n_agents = 2;  // but no starts/goals given
  auto errors = validate(cfg);
  auto mentions = [&](const std::string& field) {
    for (const auto& e : errors)
      if (e.find(field) != std::string::npos) return true;
    return false;
  };
  REQUIRE(mentions("delta_dc"));
  REQUIRE(mentions("t_end"));
  REQUIRE(mentions("starts"));
  REQUIRE(mentions("goals"));
}

TEST_CASE("circle exchange places agents evenly with diametrically opposite goals") {
  ScenarioConfig cfg;
  cfg.layout = ScenarioConfig::Layout::kCircleExchange;
  cfg.n_agents = 10;
  cfg.radius = 10.0;
  auto [starts, goals] = scenario_layout(cfg);
  REQUIRE(starts.size() == 10);
  for (int i = 0; i < 10; ++i) {
    REQUIRE(starts[i].head<2>().norm() == Catch::Approx(10.0));
    REQUIRE((goals[i].head<2>() + starts[i].head<2>()).norm() < 1e-9);
    REQUIRE(goals[i].z() == starts[i].z());
  }
}

TEST_CASE("two-agent head-on exchange under RMADER is collision-free end to end") {
  ScenarioConfig cfg;
  cfg.layout = ScenarioConfig::Layout::kExplicit;
  cfg.n_agents = 2;
  cfg.starts = {Vec3(-5, 0, 1), Vec3(5, 0, 1)};
  cfg.goals = {Vec3(5, 0, 1), Vec3(-5, 0, 1)};
  cfg.agent_box = AgentBox{{0.35, 0.35, 0.45}};
  cfg.delay.introd = 0.0;
  cfg.delta_dc = 0.075;
  cfg.t_end = 30.0;
  cfg.seed = 3;

  RunResult result = run_scenario(cfg, /*with_hull_audit=*/true);
  REQUIRE(result.ok);
  REQUIRE(result.status.status == "all_done");
  REQUIRE(result.audit.sampled_clean());
  REQUIRE(result.audit.monitor_clean());
  REQUIRE(result.audit.continuity_ok);
  REQUIRE(result.audit.hull.empty());  // the hull re-check agrees
  for (const auto& a : result.metrics.agents) REQUIRE(a.done);

  SECTION("metrics consistency") {
    for (const auto& a : result.metrics.agents) {
      REQUIRE(a.travel_distance >= 10.0 - 0.15);  // straight-line start-goal distance
      REQUIRE(a.stop_time <= a.travel_time);
      REQUIRE(a.travel_time <= result.metrics.t_final + 1e-9);
    }
  }
}

TEST_CASE("obstacle scenario builds splines clear of start positions") {
  ScenarioConfig cfg;
  cfg.layout = ScenarioConfig::Layout::kCircleExchange;
  cfg.n_agents = 4;
  cfg.radius = 5.0;
  cfg.obstacles.count = 5;
  cfg.seed = 9;
  auto trefoils = scenario_obstacles(cfg);
  REQUIRE(trefoils.size() == 5);
  auto [starts, goals] = scenario_layout(cfg);
  for (const auto& p : trefoils) {
    REQUIRE(p.valid());
    for (double t = 0.0; t < p.period(); t += 0.02) {
      Vec3 pos = trefoil_position(p, t, 0);
      for (const auto& s : starts) REQUIRE((pos - s).norm() > 0.8);
      for (const auto& g : goals) REQUIRE((pos - g).norm() > 0.8);
    }
  }
}

TEST_CASE("disjoint parallel corridors commit without a single conflict report") {
  ScenarioConfig cfg;
  cfg.layout = ScenarioConfig::Layout::kExplicit;
  cfg.n_agents = 2;
  cfg.starts = {Vec3(-5, 0, 1), Vec3(-5, 8, 1)};
  cfg.goals = {Vec3(5, 0, 1), Vec3(5, 8, 1)};
  cfg.agent_box = AgentBox{{0.35, 0.35, 0.45}};
  cfg.delay.introd = 0.05;
  cfg.delta_dc = 0.125;
  cfg.t_end = 25.0;
  cfg.seed = 7;
  RunResult result = run_scenario(cfg);
  REQUIRE(result.ok);
  REQUIRE(result.status.status == "all_done");
  REQUIRE(result.audit.sampled_clean());
  for (const auto& a : result.metrics.agents) {
    REQUIRE(a.done);
    REQUIRE(a.counters.rejections == 0);
    REQUIRE(a.counters.dc_aborts == 0);
    REQUIRE(a.counters.commits > 0);
  }
}

TEST_CASE("deadlocked agents are reported, not hidden") {
  // two agents 4 m apart whose combined box (3.6 m) leaves no way past:
  // every forward or detour candidate conflicts, only hovering is feasible
  ScenarioConfig cfg;
  cfg.layout = ScenarioConfig::Layout::kExplicit;
  cfg.n_agents = 2;
  cfg.starts = {Vec3(-2, 0, 1), Vec3(2, 0, 1)};
  cfg.goals = {Vec3(2, 0, 1), Vec3(-2, 0, 1)};
  cfg.agent_box = AgentBox{{1.8, 1.8, 1.8}};
  cfg.t_end = 14.0;
  cfg.seed = 5;
  RunResult result = run_scenario(cfg);
  REQUIRE(result.ok);
  REQUIRE(result.metrics.deadlock);
  REQUIRE(result.audit.sampled_clean());  // still no collision: nobody moved
}
