#pragma once

#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rmader/audit.hpp"
#include "rmader/cases.hpp"
#include "rmader/metrics.hpp"
#include "rmader/scenario.hpp"

namespace rmader {

/// Shortest round-trip decimal form, so parsing a CSV cell reproduces the
/// double bit-exactly.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_ledger_csv(const DelayLedger& ledger, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open ledger file: " + path);
  out << "sender,receiver,t_pub,t_recv,delta\n";
  for (const auto& r : ledger.records)
    out << r.sender << "," << r.receiver << "," << format_double(r.t_pub) << ","
        << format_double(r.t_recv) << "," << format_double(r.delta()) << "\n";
}

inline DelayLedger read_ledger_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ledger file: " + path);
  DelayLedger ledger;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    DelayRecord r;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    r.sender = std::stoi(field);
    std::getline(ss, field, ',');
    r.receiver = std::stoi(field);
    std::getline(ss, field, ',');
    r.t_pub = std::stod(field);
    std::getline(ss, field, ',');
    r.t_recv = std::stod(field);
    ledger.add(r);
  }
  return ledger;
}

struct RunResult {
  bool ok = false;
  std::string error;
  RunStatus status;
  MetricsReport metrics;
  AuditReport audit;
};

/// Build, run, and audit one scenario. The full trace is written to
/// trace_out when given (CLI runs); campaigns audit in memory and drop it.
inline RunResult run_scenario(const ScenarioConfig& cfg, bool with_hull_audit = false,
                              Trace* trace_out = nullptr, DelayLedger* ledger_out = nullptr) {
  RunResult result;
  auto errors = validate(cfg);
  if (!errors.empty()) {
    result.error = "invalid config:";
    for (const auto& e : errors) result.error += " [" + e + "]";
    return result;
  }
  try {
    Engine engine = build_engine(cfg);
    result.status = engine.run_until(cfg.t_end);
    result.metrics = compute_metrics(engine.trace());
    result.audit = audit_trace(engine.trace(), with_hull_audit);
    if (trace_out) *trace_out = engine.trace();
    if (ledger_out) *ledger_out = engine.ledger();
    result.ok = true;
  } catch (const std::exception& ex) {
    result.error = ex.what();
  }
  return result;
}

struct CampaignRow {
  std::string variant;
  double delta_introd = 0.0;
  double delta_dc = 0.0;
  std::uint64_t seed = 0;
  std::string status;
  bool collision_free = false;
  bool deadlock = false;
  bool monitor_clean = false;
  bool audit_clean = false;
  double max_commit_gap = 0.0;
  std::uint64_t commits = 0, rejections = 0, dc_aborts = 0, infeasible = 0;
  double avg_travel_time = 0.0, avg_travel_distance = 0.0, avg_stops = 0.0, avg_stop_time = 0.0;
  double avg_jerk = 0.0, max_delay = 0.0;
  int agents_done = 0;
};

inline CampaignRow summarize_run(const ScenarioConfig& cfg, const RunResult& r) {
  CampaignRow row;
  row.variant = variant_name(cfg.variant);
  row.delta_introd = cfg.delay.introd;
  row.delta_dc = cfg.delta_dc;
  row.seed = cfg.seed;
  if (!r.ok) {
    row.status = "error";
    return row;
  }
  row.status = r.status.status;
  row.collision_free = r.audit.sampled_clean();
  row.deadlock = r.metrics.deadlock;
  row.monitor_clean = r.audit.monitor_clean();
  row.audit_clean = r.audit.sampled_clean();
  row.max_commit_gap = r.audit.max_commit_gap;
  row.max_delay = r.metrics.max_delay;
  double n = std::max<std::size_t>(1, r.metrics.agents.size());
  for (const auto& a : r.metrics.agents) {
    row.commits += a.counters.commits;
    row.rejections += a.counters.rejections;
    row.dc_aborts += a.counters.dc_aborts;
    row.infeasible += a.counters.infeasible;
    row.avg_travel_time += a.travel_time / n;
    row.avg_travel_distance += a.travel_distance / n;
    row.avg_stops += a.num_stops / n;
    row.avg_stop_time += a.stop_time / n;
    row.avg_jerk += a.jerk_integral / n;
    if (a.done) ++row.agents_done;
  }
  return row;
}

/// Discarded candidates per commit (Check rejections + Delay Check aborts).
inline double rejections_per_commit(const CampaignRow& row) {
  return (row.rejections + row.dc_aborts) / static_cast<double>(std::max<std::uint64_t>(1, row.commits));
}

struct CampaignResult {
  std::vector<CampaignRow> rows;

  struct CellStats {
    std::string variant;
    double delta_introd;
    int runs = 0, errors = 0;
    double collision_free_rate = 0.0, deadlock_rate = 0.0;
    double mean_travel_time = 0.0, mean_stops = 0.0, mean_travel_distance = 0.0;
    double mean_rejections_per_commit = 0.0;
  };
  std::vector<CellStats> cells;
};

/// Cross-product sweep over (seed, introduced delay, variant) with the
/// delta_dc = delta_introd + 75 ms pairing. A failing run records its status
/// and the campaign continues. Cells run in parallel, one engine per run.
inline CampaignResult campaign(const ScenarioConfig& base, const std::vector<std::uint64_t>& seeds,
                               const std::vector<double>& delays_s,
                               const std::vector<Variant>& variants, int threads = 0) {
  struct Cell {
    Variant variant;
    double delay;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (Variant v : variants)
    for (double d : delays_s)
      for (std::uint64_t s : seeds) cells.push_back({v, d, s});

  CampaignResult result;
  result.rows.resize(cells.size());

  auto run_cell = [&](std::size_t i) {
    ScenarioConfig cfg = base;
    cfg.variant = cells[i].variant;
    cfg.variant_per_agent.clear();
    cfg.delay.mode = DelayModel::Mode::kFixed;
    cfg.delay.introd = cells[i].delay;
    cfg.delta_dc = cells[i].delay + 0.075;
    cfg.seed = cells[i].seed;
    RunResult r = run_scenario(cfg);
    result.rows[i] = summarize_run(cfg, r);
  };

  if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) run_cell(i);
    });
  for (auto& t : pool) t.join();

  for (Variant v : variants) {
    for (double d : delays_s) {
      CampaignResult::CellStats stats;
      stats.variant = variant_name(v);
      stats.delta_introd = d;
      double rpc = 0.0;
      for (const auto& row : result.rows) {
        if (row.variant != stats.variant || row.delta_introd != d) continue;
        ++stats.runs;
        if (row.status == "error") {
          ++stats.errors;
          continue;
        }
        stats.collision_free_rate += row.collision_free ? 1.0 : 0.0;
        stats.deadlock_rate += row.deadlock ? 1.0 : 0.0;
        stats.mean_travel_time += row.avg_travel_time;
        stats.mean_stops += row.avg_stops;
        stats.mean_travel_distance += row.avg_travel_distance;
        rpc += rejections_per_commit(row);
      }
      int ok_runs = stats.runs - stats.errors;
      if (ok_runs > 0) {
        stats.collision_free_rate /= ok_runs;
        stats.deadlock_rate /= ok_runs;
        stats.mean_travel_time /= ok_runs;
        stats.mean_stops /= ok_runs;
        stats.mean_travel_distance /= ok_runs;
        stats.mean_rejections_per_commit = rpc / ok_runs;
      }
      result.cells.push_back(stats);
    }
  }
  return result;
}

inline void write_runs_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open runs csv: " + path);
  out << "variant,delta_introd_ms,delta_dc_ms,seed,status,collision_free,deadlock,"
         "monitor_clean,max_commit_gap,commits,rejections,dc_aborts,infeasible,agents_done,"
         "avg_travel_time,avg_travel_distance,avg_stops,avg_stop_time,avg_jerk,max_delay\n";
  for (const auto& r : result.rows)
    out << r.variant << "," << format_double(r.delta_introd * 1000) << ","
        << format_double(r.delta_dc * 1000) << "," << r.seed << "," << r.status << ","
        << (r.collision_free ? 1 : 0) << "," << (r.deadlock ? 1 : 0) << ","
        << (r.monitor_clean ? 1 : 0) << "," << format_double(r.max_commit_gap) << "," << r.commits
        << "," << r.rejections << "," << r.dc_aborts << "," << r.infeasible << ","
        << r.agents_done << "," << format_double(r.avg_travel_time) << ","
        << format_double(r.avg_travel_distance) << "," << format_double(r.avg_stops) << ","
        << format_double(r.avg_stop_time) << "," << format_double(r.avg_jerk) << ","
        << format_double(r.max_delay) << "\n";
}

inline void write_summary_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open summary csv: " + path);
  out << "variant,delta_introd_ms,runs,errors,collision_free_rate,deadlock_rate,"
         "mean_travel_time,mean_travel_distance,mean_stops,mean_rejections_per_commit\n";
  for (const auto& c : result.cells)
    out << c.variant << "," << format_double(c.delta_introd * 1000) << "," << c.runs << ","
        << c.errors << "," << format_double(c.collision_free_rate) << ","
        << format_double(c.deadlock_rate) << "," << format_double(c.mean_travel_time) << ","
        << format_double(c.mean_travel_distance) << "," << format_double(c.mean_stops) << ","
        << format_double(c.mean_rejections_per_commit) << "\n";
}

/// gnuplot-friendly delay histogram (bin_start_ms, count).
inline void write_delay_histogram(const MetricsReport& metrics, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open histogram file: " + path);
  out << "# bin_start_ms count\n";
  for (const auto& [bin, count] : metrics.delay_histogram)
    out << format_double(bin * 5.0) << " " << count << "\n";
}

}  // namespace rmader
