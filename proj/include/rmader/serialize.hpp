#pragma once

#include <json.hpp>

#include "rmader/geometry.hpp"
#include "rmader/trajectory.hpp"

namespace rmader {

using json = nlohmann::json;

/// Flat wire/trace form of a trajectory: owner, seq, knots, control points
/// (row-major over segments and control points, axis fastest), terminal_hover.
inline json spline_to_json(const TrajectorySpline& t) {
  json j;
  j["owner"] = t.owner;
  j["seq"] = t.seq;
  j["knots"] = t.knots;
  std::vector<double> ctrl;
  ctrl.reserve(t.segments.size() * 12);
  for (const auto& seg : t.segments)
    for (const auto& p : seg.ctrl)
      for (int i = 0; i < 3; ++i) ctrl.push_back(p[i]);
  j["ctrl"] = std::move(ctrl);
  j["terminal_hover"] = t.terminal_hover;
  return j;
}

inline TrajectorySpline spline_from_json(const json& j) {
  TrajectorySpline t;
  t.owner = j.at("owner").get<int>();
  t.seq = j.at("seq").get<std::uint64_t>();
  t.knots = j.at("knots").get<std::vector<double>>();
  t.terminal_hover = j.at("terminal_hover").get<bool>();
  const auto& ctrl = j.at("ctrl");
  std::size_t n_seg = ctrl.size() / 12;
  t.segments.resize(n_seg);
  std::size_t k = 0;
  for (auto& seg : t.segments)
    for (auto& p : seg.ctrl)
      for (int i = 0; i < 3; ++i) p[i] = ctrl[k++].get<double>();
  return t;
}

inline json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

}  // namespace rmader
