#pragma once

#include <yaml-cpp/yaml.h>

#include <stdexcept>
#include <string>

#include "rmader/scenario.hpp"

namespace rmader {

namespace yaml_detail {

inline Vec3 as_vec3(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence() || n.size() != 3)
    throw std::runtime_error(field + ": expected a sequence of 3 numbers");
  return Vec3(n[0].as<double>(), n[1].as<double>(), n[2].as<double>());
}

inline double ms(const YAML::Node& n) { return n.as<double>() / 1000.0; }

}  // namespace yaml_detail

/// Load a scenario from the documented YAML schema (see README). Unknown
/// keys are ignored; invalid values raise with the field name.
inline ScenarioConfig scenario_from_yaml(const YAML::Node& root) {
  using yaml_detail::as_vec3;
  using yaml_detail::ms;
  ScenarioConfig cfg;
  YAML::Node s = root["scenario"] ? root["scenario"] : root;

  if (s["name"]) cfg.name = s["name"].as<std::string>();
  if (s["layout"]) {
    std::string layout = s["layout"].as<std::string>();
    if (layout == "circle_exchange") {
      cfg.layout = ScenarioConfig::Layout::kCircleExchange;
    } else if (layout == "explicit") {
      cfg.layout = ScenarioConfig::Layout::kExplicit;
    } else {
      throw std::runtime_error("layout: expected circle_exchange or explicit");
    }
  }
  if (s["agents"]) cfg.n_agents = s["agents"].as<int>();
  if (s["radius"]) cfg.radius = s["radius"].as<double>();
  if (s["altitude"]) cfg.altitude = s["altitude"].as<double>();
  if (s["starts"])
    for (const auto& n : s["starts"]) cfg.starts.push_back(as_vec3(n, "starts"));
  if (s["goals"])
    for (const auto& n : s["goals"]) cfg.goals.push_back(as_vec3(n, "goals"));
  if (s["variant"]) {
    auto v = variant_from_name(s["variant"].as<std::string>());
    if (!v) throw std::runtime_error("variant: expected rmader, rmader_no_check or mader_baseline");
    cfg.variant = *v;
  }
  if (s["delta_dc_ms"]) cfg.delta_dc = ms(s["delta_dc_ms"]);
  if (s["tick_ms"]) cfg.tick = ms(s["tick_ms"]);
  if (s["t_end"]) cfg.t_end = s["t_end"].as<double>();
  if (s["seed"]) cfg.seed = s["seed"].as<std::uint64_t>();
  if (s["check_latency_ms"]) cfg.check_latency = ms(s["check_latency_ms"]);
  if (s["goal_tolerance"]) cfg.goal_tol = s["goal_tolerance"].as<double>();
  if (s["horizon"]) cfg.horizon = s["horizon"].as<double>();
  if (s["stagger_max_ms"]) cfg.stagger_max = ms(s["stagger_max_ms"]);
  if (s["agent_box"]) cfg.agent_box.half = as_vec3(s["agent_box"], "agent_box");

  if (YAML::Node lim = s["limits"]) {
    if (lim["v_max"]) cfg.limits.v_max = lim["v_max"].as<double>();
    if (lim["a_max"]) cfg.limits.a_max = lim["a_max"].as<double>();
    if (lim["j_max"]) cfg.limits.j_max = lim["j_max"].as<double>();
  }

  if (YAML::Node d = s["delay"]) {
    std::string mode = d["mode"] ? d["mode"].as<std::string>() : "fixed";
    if (mode == "fixed") {
      cfg.delay.mode = DelayModel::Mode::kFixed;
    } else if (mode == "fixed_plus_jitter") {
      cfg.delay.mode = DelayModel::Mode::kFixedPlusJitter;
    } else {
      throw std::runtime_error("delay.mode: expected fixed or fixed_plus_jitter");
    }
    if (d["introd_ms"]) cfg.delay.introd = ms(d["introd_ms"]);
    if (d["jitter_max_ms"]) cfg.delay.jitter_max = ms(d["jitter_max_ms"]);
    if (d["jitter"]) {
      std::string j = d["jitter"].as<std::string>();
      if (j == "uniform") {
        cfg.delay.jitter = DelayModel::Jitter::kUniform;
      } else if (j == "truncated_exp") {
        cfg.delay.jitter = DelayModel::Jitter::kTruncatedExp;
      } else {
        throw std::runtime_error("delay.jitter: expected uniform or truncated_exp");
      }
    }
    if (d["jitter_rate"]) cfg.delay.jitter_rate = d["jitter_rate"].as<double>();
  }

  if (YAML::Node p = s["planner_latency"]) {
    std::string kind = p["kind"] ? p["kind"].as<std::string>() : "uniform";
    if (kind == "fixed") {
      cfg.latency.kind = PlannerLatency::Kind::kFixed;
      if (p["value_ms"]) cfg.latency.fixed = ms(p["value_ms"]);
    } else if (kind == "uniform") {
      cfg.latency.kind = PlannerLatency::Kind::kUniform;
      if (p["lo_ms"]) cfg.latency.lo = ms(p["lo_ms"]);
      if (p["hi_ms"]) cfg.latency.hi = ms(p["hi_ms"]);
    } else {
      throw std::runtime_error("planner_latency.kind: expected fixed or uniform");
    }
  }

  if (YAML::Node o = s["obstacles"]) {
    if (o["count"]) cfg.obstacles.count = o["count"].as<int>();
    if (o["box"]) cfg.obstacles.box.half = as_vec3(o["box"], "obstacles.box");
    if (o["center_min"]) cfg.obstacles.center_min = as_vec3(o["center_min"], "obstacles.center_min");
    if (o["center_max"]) cfg.obstacles.center_max = as_vec3(o["center_max"], "obstacles.center_max");
    if (o["scale"]) {
      cfg.obstacles.scale_min = o["scale"][0].as<double>();
      cfg.obstacles.scale_max = o["scale"][1].as<double>();
    }
    if (o["rate"]) {
      cfg.obstacles.rate_min = o["rate"][0].as<double>();
      cfg.obstacles.rate_max = o["rate"][1].as<double>();
    }
  }
  return cfg;
}

inline ScenarioConfig scenario_from_yaml_file(const std::string& path) {
  return scenario_from_yaml(YAML::LoadFile(path));
}

}  // namespace rmader
