// Command-line front end: single runs, Monte-Carlo campaigns, the 12-case
// deconfliction conformance suite, and the offline trace auditor.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "rmader/campaign.hpp"
#include "rmader/yaml_config.hpp"

namespace fs = std::filesystem;
using namespace rmader;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("RMADER_SIM_OUT");
  return env ? env : "out";
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto dots = text.find("..");
  std::vector<std::uint64_t> seeds;
  if (dots == std::string::npos) {
    seeds.push_back(std::stoull(text));
    return seeds;
  }
  std::uint64_t a = std::stoull(text.substr(0, dots));
  std::uint64_t b = std::stoull(text.substr(dots + 2));
  for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
  return seeds;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir) {
  ScenarioConfig cfg = scenario_from_yaml_file(config_path);
  if (seed) cfg.seed = *seed;
  auto errors = validate(cfg);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
    return 2;
  }
  fs::create_directories(out_dir);

  Trace trace;
  DelayLedger ledger;
  RunResult result = run_scenario(cfg, /*with_hull_audit=*/false, &trace, &ledger);
  if (!result.ok) {
    std::cerr << "run failed: " << result.error << "\n";
    return 1;
  }
  write_trace(trace, out_dir + "/trace.jsonl");
  write_ledger_csv(ledger, out_dir + "/ledger.csv");
  {
    std::ofstream m(out_dir + "/metrics.json", std::ios::binary);
    m << result.metrics.to_json().dump(2) << "\n";
    std::ofstream a(out_dir + "/audit.json", std::ios::binary);
    a << result.audit.to_json().dump(2) << "\n";
  }
  write_delay_histogram(result.metrics, out_dir + "/delay_histogram.dat");

  std::cout << "status: " << result.status.status << " at t=" << result.status.t_final << "\n"
            << "collision_free: " << (result.audit.sampled_clean() ? "yes" : "no") << "\n"
            << "monitor_clean: " << (result.audit.monitor_clean() ? "yes" : "no") << "\n"
            << "deadlock: " << (result.metrics.deadlock ? "yes" : "no") << "\n"
            << "outputs in " << out_dir << "\n";
  return result.audit.sampled_clean() ? 0 : 1;
}

int cmd_campaign(const std::string& config_path, const std::string& seeds_text,
                 const std::string& delays_text, const std::string& variants_text,
                 const std::string& out_dir, int threads) {
  ScenarioConfig base = scenario_from_yaml_file(config_path);
  auto errors = validate(base);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
    return 2;
  }
  std::vector<std::uint64_t> seeds = parse_seed_range(seeds_text);

  std::vector<double> delays;
  {
    std::stringstream ss(delays_text);
    std::string item;
    while (std::getline(ss, item, ',')) delays.push_back(std::stod(item) / 1000.0);
  }
  std::vector<Variant> variants;
  {
    std::stringstream ss(variants_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto v = variant_from_name(item);
      if (!v) {
        std::cerr << "unknown variant: " << item << "\n";
        return 2;
      }
      variants.push_back(*v);
    }
  }

  CampaignResult result = campaign(base, seeds, delays, variants, threads);
  fs::create_directories(out_dir);
  write_runs_csv(result, out_dir + "/runs.csv");
  write_summary_csv(result, out_dir + "/summary.csv");

  std::cout << "variant,delta_introd_ms,collision_free_rate,deadlock_rate\n";
  for (const auto& c : result.cells)
    std::cout << c.variant << "," << c.delta_introd * 1000 << "," << c.collision_free_rate << ","
              << c.deadlock_rate << "\n";
  std::cout << "rows: " << result.rows.size() << ", outputs in " << out_dir << "\n";
  return 0;
}

int cmd_cases(double delta_dc_ms) {
  double delta_dc = delta_dc_ms / 1000.0;
  if (delta_dc < 0.025) {
    std::cerr << "delay-check must be >= 25 ms for the scripted timelines\n";
    return 2;
  }
  auto outcomes = run_all_cases(delta_dc);
  bool all_ok = true;
  for (const auto& o : outcomes) {
    if (!o.constructible) {
      std::cout << "case " << o.case_id << ": unconstructible (" << o.reason << ")\n";
      all_ok = all_ok && o.matches_expected;
      continue;
    }
    std::cout << "case " << o.case_id << ": detector="
              << (o.detector == 0 ? "A" : o.detector == 1 ? "B" : "none") << " phase=" << o.phase
              << " committed_conflict=" << (o.committed_conflict ? "yes" : "no")
              << (o.matches_expected ? "  [ok]" : "  [MISMATCH]") << "\n";
    all_ok = all_ok && o.matches_expected && o.delay_bound_ok;
  }
  std::cout << (all_ok ? "all cases conform" : "CONFORMANCE FAILURE") << "\n";
  return all_ok ? 0 : 1;
}

int cmd_audit(const std::string& trace_dir) {
  std::string path = fs::is_directory(trace_dir) ? trace_dir + "/trace.jsonl" : trace_dir;
  Trace trace = read_trace(path);
  AuditReport report = audit_trace(trace, /*with_hull=*/true);
  std::cout << report.to_json().dump(2) << "\n";
  bool implication_ok =
      !report.guarantee_applicable || !report.monitor_clean() || report.sampled_clean();
  std::cerr << "audit: " << (report.sampled_clean() ? "clean" : "collisions found")
            << ", monitor: " << (report.monitor_clean() ? "clean" : "violations")
            << ", continuity: " << (report.continuity_ok ? "ok" : "violated") << "\n";
  return report.sampled_clean() && implication_ok && report.continuity_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RMADER deconfliction simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = default_out_dir(), trace_dir;
  std::optional<std::uint64_t> seed;
  std::string seeds_text = "1..20", delays_text = "0,50,100,200,300";
  std::string variants_text = "rmader,nocheck,mader";
  double delta_dc_ms = 75.0;
  int threads = 0;

  auto* run = app.add_subcommand("run", "run one scenario and write trace/metrics/audit");
  run->add_option("--config", config_path, "scenario YAML")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out_dir, "output directory (default $RMADER_SIM_OUT or ./out)");

  auto* camp = app.add_subcommand("campaign", "seeded sweep over delays and variants");
  camp->add_option("--config", config_path, "scenario YAML template")->required();
  camp->add_option("--seeds", seeds_text, "seed range A..B or single seed");
  camp->add_option("--delays", delays_text, "comma-separated introduced delays in ms");
  camp->add_option("--variants", variants_text, "comma-separated: rmader,nocheck,mader");
  camp->add_option("--out", out_dir, "output directory");
  camp->add_option("--threads", threads, "worker threads (default: hardware)");

  auto* cases = app.add_subcommand("cases", "12-case deconfliction conformance suite");
  cases->add_option("--delay-check", delta_dc_ms, "Delay Check length in ms (default 75)");

  auto* audit = app.add_subcommand("audit", "offline audit of a recorded trace");
  audit->add_option("--trace", trace_dir, "trace directory or trace.jsonl path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out_dir);
    if (camp->parsed()) return cmd_campaign(config_path, seeds_text, delays_text, variants_text,
                                            out_dir, threads);
    if (cases->parsed()) return cmd_cases(delta_dc_ms);
    if (audit->parsed()) return cmd_audit(trace_dir);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
