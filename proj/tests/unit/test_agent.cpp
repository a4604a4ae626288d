#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rmader/agent.hpp"

using namespace rmader;
using rmader::test::splines_identical;
using rmader::test::straight_spline;

namespace {

AgentConfig base_config(Variant variant) {
  AgentConfig cfg;
  cfg.id = 1;
  cfg.variant = variant;
  cfg.start = Vec3(5, 0, 1);
  cfg.goal = Vec3(-5, 0, 1);
  cfg.box = AgentBox{{0.3, 0.3, 0.3}};
  cfg.peer_box = AgentBox{{0.3, 0.3, 0.3}};
  cfg.limits = DynamicLimits{10, 20, 30};
  cfg.delta_dc = 0.075;
  cfg.tick = 0.005;
  return cfg;
}

/// Candidate consistent with the agent's commitment at the requested switch.
PlanResult canned_plan(const PlanRequest& req, const Vec3& goal) {
  PlanResult r;
  r.feasible = true;
  PlanRequest req2 = req;
  r.candidate = detail::solve_candidate(req2, 0.5 * (req.start_pos + goal), goal, 4.0);
  return r;
}

TrajMessage head_on_opt(int sender, std::uint64_t seq, double t_switch = 0.2) {
  PlanRequest req;
  req.start_pos = Vec3(-5, 0, 1);
  req.t_switch = t_switch;
  TrajMessage m;
  m.kind = MsgKind::kOpt;
  m.traj = detail::solve_candidate(req, Vec3(0, 0, 1), Vec3(5, 0, 1), 4.0);
  m.traj.owner = sender;
  m.traj.seq = seq;
  m.sender = sender;
  m.seq = seq;
  m.t_pub = 0.0;
  return m;
}

bool has_event(const AgentOutputs& out, const std::string& kind) {
  for (const auto& e : out.events)
    if (e.kind == kind) return true;
  return false;
}

}  // namespace

TEST_CASE("snapshot immunity: messages arriving during optimization hit the Check") {
  Agent agent(base_config(Variant::kRmader));
  AgentOutputs out = agent.start_iteration(0.0, 0.05);
  REQUIRE(out.plan_request.has_value());
  REQUIRE(agent.phase() == Phase::kOptimizing);

  // conflicting candidate arrives mid-optimization: not in the snapshot,
  // caught by the Check against Q(t_check_start)
  agent.on_message(head_on_opt(0, 1));
  PlanResult result = canned_plan(*out.plan_request, agent.config().goal);
  AgentOutputs fin = agent.finish_optimization(0.05, result);
  REQUIRE(agent.phase() == Phase::kChecking);
  REQUIRE(fin.broadcasts.empty());

  AgentOutputs cd = agent.check_done(0.05);
  REQUIRE(agent.phase() == Phase::kIdle);
  REQUIRE(has_event(cd, "reject"));
  REQUIRE(agent.counters().rejections == 1);
  REQUIRE(splines_identical(agent.committed(), hover_spline(1, 0, Vec3(5, 0, 1), 0.0)));
}

TEST_CASE("clean Check broadcasts the candidate and enters the Delay Check") {
  Agent agent(base_config(Variant::kRmader));
  AgentOutputs out = agent.start_iteration(0.0, 0.05);
  AgentOutputs fin = agent.finish_optimization(0.05, canned_plan(*out.plan_request, agent.config().goal));
  REQUIRE(fin.broadcasts.empty());
  AgentOutputs cd = agent.check_done(0.05);
  REQUIRE(agent.phase() == Phase::kDelayChecking);
  REQUIRE(cd.broadcasts.size() == 1);
  REQUIRE(cd.broadcasts[0].kind == MsgKind::kOpt);
  REQUIRE(cd.broadcasts[0].seq == 1);
}

TEST_CASE("quiet Delay Check commits exactly at the deadline tick") {
  Agent agent(base_config(Variant::kRmader));
  AgentOutputs out = agent.start_iteration(0.0, 0.05);
  double t_switch = out.plan_request->t_switch;
  agent.finish_optimization(0.05, canned_plan(*out.plan_request, agent.config().goal));
  agent.check_done(0.05);

  double deadline = 0.05 + 0.075;
  for (double t = 0.055; t < deadline - 1e-9; t += 0.005) {
    agent.delay_check_tick(t);
    REQUIRE(agent.phase() == Phase::kDelayChecking);
  }
  AgentOutputs at_deadline = agent.delay_check_tick(deadline);
  REQUIRE(agent.phase() == Phase::kIdle);
  REQUIRE(agent.counters().commits == 1);
  REQUIRE(has_event(at_deadline, "commit"));
  REQUIRE(at_deadline.broadcasts.size() == 1);
  REQUIRE(at_deadline.broadcasts[0].kind == MsgKind::kComm);

  // third-order continuity at the switch instant
  auto gaps = continuity_gap(hover_spline(1, 0, Vec3(5, 0, 1), 0.0), agent.committed(), t_switch);
  REQUIRE(gaps[0] <= 1e-9);
  REQUIRE(gaps[1] <= 1e-9);
  REQUIRE(gaps[2] <= 1e-9);

  // the freshly committed trajectory re-checks clean against the store
  auto entries = agent.store().constraints(agent.config().peer_box);
  ConflictReport recheck = check_against_store(agent.committed(), entries, agent.config().box,
                                               deadline, agent.committed().end_time());
  REQUIRE(!recheck.in_conflict);
}

TEST_CASE("a conflicting message arriving just before the deadline still aborts") {
  Agent agent(base_config(Variant::kRmader));
  AgentOutputs out = agent.start_iteration(0.0, 0.05);
  agent.finish_optimization(0.05, canned_plan(*out.plan_request, agent.config().goal));
  agent.check_done(0.05);
  std::string committed_before = spline_to_json(agent.committed()).dump();

  double deadline = 0.05 + 0.075;
  for (double t = 0.055; t < deadline - 1e-9; t += 0.005) agent.delay_check_tick(t);
  agent.on_message(head_on_opt(0, 1));  // delivery at deadline - epsilon
  AgentOutputs final_tick = agent.delay_check_tick(deadline);

  REQUIRE(agent.phase() == Phase::kIdle);
  REQUIRE(agent.counters().dc_aborts == 1);
  REQUIRE(agent.counters().commits == 0);
  REQUIRE(has_event(final_tick, "dc_abort"));
  // no commit on abort: committed trajectory is bit-identical
  REQUIRE(spline_to_json(agent.committed()).dump() == committed_before);
  // the early termination re-broadcasts the committed trajectory
  REQUIRE(final_tick.broadcasts.size() == 1);
  REQUIRE(final_tick.broadcasts[0].kind == MsgKind::kComm);
}

TEST_CASE("no-Check variant publishes immediately and catches conflicts in the Delay Check") {
  Agent agent(base_config(Variant::kRmaderNoCheck));
  AgentOutputs out = agent.start_iteration(0.0, 0.05);
  agent.on_message(head_on_opt(0, 1));  // arrives during optimization

  AgentOutputs fin = agent.finish_optimization(0.05, canned_plan(*out.plan_request, agent.config().goal));
  REQUIRE(agent.phase() == Phase::kDelayChecking);  // no Check step
  REQUIRE(fin.broadcasts.size() == 1);
  REQUIRE(fin.broadcasts[0].kind == MsgKind::kOpt);

  AgentOutputs tick = agent.delay_check_tick(0.055);
  REQUIRE(agent.phase() == Phase::kIdle);
  REQUIRE(agent.counters().dc_aborts == 1);
  REQUIRE(has_event(tick, "dc_abort"));
}

TEST_CASE("MADER baseline commits right after a passing Check") {
  Agent late(base_config(Variant::kMaderBaseline));
  AgentOutputs lout = late.start_iteration(0.0, 0.05);
  late.finish_optimization(0.05, canned_plan(*lout.plan_request, late.config().goal));
  AgentOutputs cd = late.check_done(0.05);
  REQUIRE(late.phase() == Phase::kIdle);
  REQUIRE(late.counters().commits == 1);
  REQUIRE(cd.broadcasts.size() == 1);
  REQUIRE(cd.broadcasts[0].kind == MsgKind::kComm);
  // the conflicting message was still in flight: the baseline committed a
  // trajectory that collides with it (the failure mode the Delay Check fixes)
  late.on_message(head_on_opt(0, 1));
  late.store().drain();
  auto entries = late.store().constraints(late.config().peer_box);
  ConflictReport r = check_against_store(late.committed(), entries, late.config().box, 0.0, 5.0);
  REQUIRE(r.in_conflict);
}

TEST_CASE("infeasible plans leave the committed trajectory and retry") {
  Agent agent(base_config(Variant::kRmader));
  agent.start_iteration(0.0, 0.05);
  PlanResult infeasible;
  AgentOutputs out = agent.finish_optimization(0.05, infeasible);
  REQUIRE(agent.phase() == Phase::kIdle);
  REQUIRE(agent.counters().infeasible == 1);
  REQUIRE(has_event(out, "plan_infeasible"));

  // the next tick starts a fresh iteration
  AgentOutputs next = agent.tick(0.055, 0.05);
  REQUIRE(agent.phase() == Phase::kOptimizing);
  REQUIRE(next.plan_request.has_value());
}

TEST_CASE("variant equivalence: with no traffic RMADER and no-Check commit identically") {
  Agent a(base_config(Variant::kRmader));
  Agent b(base_config(Variant::kRmaderNoCheck));

  AgentOutputs oa = a.start_iteration(0.0, 0.05);
  AgentOutputs ob = b.start_iteration(0.0, 0.05);
  PlanResult plan_a = canned_plan(*oa.plan_request, a.config().goal);
  PlanResult plan_b = canned_plan(*ob.plan_request, b.config().goal);
  a.finish_optimization(0.05, plan_a);
  a.check_done(0.05);
  b.finish_optimization(0.05, plan_b);
  for (double t = 0.055; t <= 0.2; t += 0.005) {
    a.delay_check_tick(t);
    b.delay_check_tick(t);
  }
  REQUIRE(a.counters().commits == 1);
  REQUIRE(b.counters().commits == 1);
  REQUIRE(splines_identical(a.committed(), b.committed()));
}

TEST_CASE("receiving a COMM collapses the peer entry to exactly one trajectory") {
  Agent receiver(base_config(Variant::kRmader));
  receiver.store().seed_peer(0, hover_spline(0, 0, Vec3(-5, 0, 1), 0.0));
  receiver.on_message(head_on_opt(0, 1));
  receiver.on_message(head_on_opt(0, 2));
  receiver.store().drain();
  REQUIRE(receiver.store().peers().at(0).opts.size() == 2);

  TrajMessage comm = head_on_opt(0, 3);
  comm.kind = MsgKind::kComm;
  receiver.on_message(comm);
  receiver.store().drain();
  REQUIRE(receiver.store().peers().at(0).opts.empty());
  REQUIRE(splines_identical(receiver.store().peers().at(0).comm, comm.traj));
}
