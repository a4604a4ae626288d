#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmader/serialize.hpp"

namespace rmader {

/// One structured record in a run trace. Serialized as a JSON line with the
/// schema {t, kind, agent, detail}; kinds in use:
///   run_header, agent_init, obstacle_init, phase, plan_infeasible,
///   broadcast, delivery, reject, dc_abort, commit, done, scenario_end
struct TraceEvent {
  double t = 0.0;
  std::string kind;
  int agent = -1;
  json detail;
};

using Trace = std::vector<TraceEvent>;

inline json trace_event_to_json(const TraceEvent& e) {
  return json{{"t", e.t}, {"kind", e.kind}, {"agent", e.agent}, {"detail", e.detail}};
}

inline TraceEvent trace_event_from_json(const json& j) {
  TraceEvent e;
  e.t = j.at("t").get<double>();
  e.kind = j.at("kind").get<std::string>();
  e.agent = j.at("agent").get<int>();
  e.detail = j.at("detail");
  return e;
}

inline void write_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  for (const auto& e : trace) out << trace_event_to_json(e).dump() << "\n";
}

inline Trace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": corrupt trace line");
    trace.push_back(trace_event_from_json(j));
  }
  return trace;
}

}  // namespace rmader
