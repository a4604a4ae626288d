#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmader/planner.hpp"
#include "rmader/store.hpp"
#include "rmader/trace.hpp"
#include "rmader/trajectory.hpp"

namespace rmader {

enum class Variant { kRmader, kRmaderNoCheck, kMaderBaseline };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kRmader: return "rmader";
    case Variant::kRmaderNoCheck: return "rmader_no_check";
    default: return "mader_baseline";
  }
}

inline std::optional<Variant> variant_from_name(const std::string& s) {
  if (s == "rmader") return Variant::kRmader;
  if (s == "rmader_no_check" || s == "nocheck") return Variant::kRmaderNoCheck;
  if (s == "mader_baseline" || s == "mader") return Variant::kMaderBaseline;
  return std::nullopt;
}

enum class Phase { kIdle, kOptimizing, kChecking, kDelayChecking, kDone };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kIdle: return "idle";
    case Phase::kOptimizing: return "optimizing";
    case Phase::kChecking: return "checking";
    case Phase::kDelayChecking: return "delay_checking";
    default: return "done";
  }
}

struct AgentConfig {
  int id = 0;
  Variant variant = Variant::kRmader;
  Vec3 start{0, 0, 0};
  Vec3 goal{0, 0, 0};
  AgentBox box{{0.25, 0.25, 0.25}};
  AgentBox peer_box{{0.25, 0.25, 0.25}};
  DynamicLimits limits;
  double delta_dc = 0.075;     // Delay Check window length
  double tick = 0.005;         // agent tick period
  double check_latency = 0.0;  // duration of the Check step
  double goal_tol = 0.1;
  double horizon = 4.0;
  double switch_slack = 0.015;  // margin added to the replan switch budget
  double lambda_detour = 0.5;
  int stall_budget = 60;  // consecutive failed iterations before flagging stalled
};

struct AgentCounters {
  std::uint64_t rejections = 0;  // candidates discarded by the Check step
  std::uint64_t dc_aborts = 0;   // candidates discarded by the Delay Check
  std::uint64_t commits = 0;
  std::uint64_t infeasible = 0;  // planner returned no candidate
  std::uint64_t late_discards = 0;
};

/// Side effects of one protocol step, applied by the simulation driver:
/// messages to broadcast, an optional planning request, trace records.
struct AgentOutputs {
  std::vector<TrajMessage> broadcasts;
  std::optional<PlanRequest> plan_request;
  std::vector<TraceEvent> events;
};

/// One agent's deconfliction state machine: the Optimization / Check /
/// Delay-Check loop, two-step trajectory publication, the commit rule, and
/// the queued trajectory store. Inputs arrive as calls from a single
/// deterministic driver; the class never talks to a clock or network itself.
class Agent {
 public:
  explicit Agent(AgentConfig cfg)
      : cfg_(std::move(cfg)), traj_comm_(hover_spline(cfg_.id, 0, cfg_.start, 0.0)) {}

  const AgentConfig& config() const { return cfg_; }
  Phase phase() const { return phase_; }
  bool done() const { return phase_ == Phase::kDone; }
  bool stalled() const { return stalled_; }
  const TrajectorySpline& committed() const { return traj_comm_; }
  const std::optional<TrajectorySpline>& candidate() const { return traj_opt_; }
  PeerStore& store() { return store_; }
  const PeerStore& store() const { return store_; }
  const AgentCounters& counters() const { return counters_; }

  TraceEvent init_event() const {
    TraceEvent e{0.0, "agent_init", cfg_.id, {}};
    e.detail["start"] = vec3_to_json(cfg_.start);
    e.detail["goal"] = vec3_to_json(cfg_.goal);
    e.detail["box"] = vec3_to_json(cfg_.box.half);
    e.detail["delta_dc"] = cfg_.delta_dc;
    e.detail["variant"] = variant_name(cfg_.variant);
    e.detail["initial_comm"] = spline_to_json(traj_comm_);
    return e;
  }

  /// Queue an incoming trajectory message (footnote-4 semantics: the store
  /// itself is only updated at the next drain boundary).
  void on_message(const TrajMessage& msg) { store_.enqueue(msg); }

  /// Periodic tick. In IDLE this starts the next planning iteration (the
  /// driver supplies the sampled optimization latency); in DELAY_CHECKING it
  /// runs one Delay Check round.
  AgentOutputs tick(double t, double sampled_delta_o) {
    switch (phase_) {
      case Phase::kIdle:
        return maybe_start_iteration(t, sampled_delta_o);
      case Phase::kDelayChecking:
        return delay_check_tick(t);
      default:
        return {};
    }
  }

  /// Start one planning iteration: drain queued updates, snapshot the store,
  /// and request a plan constrained by that snapshot.
  AgentOutputs start_iteration(double t, double sampled_delta_o) {
    AgentOutputs out;
    store_.drain();
    snapshot_version_ = store_.version();

    double budget = sampled_delta_o + cfg_.check_latency + cfg_.switch_slack +
                    (cfg_.variant == Variant::kMaderBaseline ? 0.0 : cfg_.delta_dc) + cfg_.tick;
    PlanRequest req;
    req.t_now = t;
    req.t_switch = t + budget;
    req.start_pos = evaluate(traj_comm_, req.t_switch, 0);
    req.start_vel = evaluate(traj_comm_, req.t_switch, 1);
    req.start_acc = evaluate(traj_comm_, req.t_switch, 2);
    req.goal = cfg_.goal;
    req.snapshot = &store_;
    req.limits = cfg_.limits;
    req.horizon = cfg_.horizon;
    req.own_box = cfg_.box;
    req.peer_box = cfg_.peer_box;
    req.goal_tol = cfg_.goal_tol;
    req.lambda_detour = cfg_.lambda_detour;
    req.retry_level = consecutive_failures_;
    out.plan_request = req;
    set_phase(t, Phase::kOptimizing, out);
    return out;
  }

  /// Optimization finished. RMADER runs the Check against the freshly
  /// drained store (verdict applied after check_latency); the no-Check
  /// variant broadcasts the candidate immediately and enters the Delay
  /// Check; the MADER baseline commits straight after a passing Check.
  AgentOutputs finish_optimization(double t, const PlanResult& result) {
    AgentOutputs out;
    if (phase_ != Phase::kOptimizing) return out;
    if (!result.feasible) {
      ++counters_.infeasible;
      note_failure();
      TraceEvent e{t, "plan_infeasible", cfg_.id, {}};
      for (const auto& [owner, seq] : result.conflicts)
        e.detail["conflicts"].push_back({{"owner", owner}, {"seq", seq}});
      out.events.push_back(e);
      set_phase(t, Phase::kIdle, out);
      return out;
    }
    traj_opt_ = result.candidate;
    traj_opt_->owner = cfg_.id;
    t_switch_ = traj_opt_->start_time();

    if (cfg_.variant == Variant::kRmaderNoCheck) {
      broadcast(t, MsgKind::kOpt, *traj_opt_, out);
      last_clean_version_ = snapshot_version_;  // candidate was planned against it
      dc_deadline_ = t + cfg_.delta_dc;
      set_phase(t, Phase::kDelayChecking, out);
      return out;
    }

    // Check step: verdict computed against Q(t_check_start), applied at the
    // end of the check window; arrivals during the check wait for the next
    // drain boundary.
    store_.drain();
    pending_check_ = check_candidate(t);
    check_version_ = store_.version();
    set_phase(t, Phase::kChecking, out);
    return out;
  }

  /// Apply the Check verdict (called check_latency after finish_optimization).
  AgentOutputs check_done(double t) {
    AgentOutputs out;
    if (phase_ != Phase::kChecking || !pending_check_) return out;
    ConflictReport verdict = *pending_check_;
    pending_check_.reset();

    if (verdict.in_conflict) {
      ++counters_.rejections;
      note_failure();
      TraceEvent e{t, "reject", cfg_.id, {}};
      e.detail["against"] = verdict.pair.second;
      e.detail["margin"] = verdict.min_margin;
      if (conflict_seq_) e.detail["against_seq"] = *conflict_seq_;
      out.events.push_back(e);
      traj_opt_.reset();
      set_phase(t, Phase::kIdle, out);
      return out;
    }

    if (cfg_.variant == Variant::kMaderBaseline) {
      commit(t, out);
      return out;
    }

    broadcast(t, MsgKind::kOpt, *traj_opt_, out);
    last_clean_version_ = check_version_;
    dc_deadline_ = t + cfg_.delta_dc;
    set_phase(t, Phase::kDelayChecking, out);
    return out;
  }

  /// One Delay Check round: drain queued updates, re-check the candidate
  /// against the store whenever it changed, abort on conflict, and commit
  /// once the deadline has passed with a clean store.
  AgentOutputs delay_check_tick(double t) {
    AgentOutputs out;
    if (phase_ != Phase::kDelayChecking || !traj_opt_) return out;
    store_.drain();
    if (store_.version() != last_clean_version_) {
      ConflictReport verdict = check_candidate(t);
      if (verdict.in_conflict) {
        ++counters_.dc_aborts;
        note_failure();
        TraceEvent e{t, "dc_abort", cfg_.id, {}};
        e.detail["against"] = verdict.pair.second;
        e.detail["margin"] = verdict.min_margin;
        e.detail["candidate_seq"] = last_opt_seq_;
        if (conflict_seq_) e.detail["against_seq"] = *conflict_seq_;
        out.events.push_back(e);
        traj_opt_.reset();
        // early termination keeps the committed trajectory; re-broadcasting
        // it purges the discarded candidate from the peers' stores
        broadcast(t, MsgKind::kComm, trim_front(traj_comm_, t), out);
        set_phase(t, Phase::kIdle, out);
        return out;
      }
      last_clean_version_ = store_.version();
    }
    if (t >= dc_deadline_) commit(t, out);
    return out;
  }

 private:
  AgentOutputs maybe_start_iteration(double t, double sampled_delta_o) {
    if (done_check(t)) {
      AgentOutputs out;
      TraceEvent e{t, "done", cfg_.id, {}};
      e.detail["travel_end"] = t;
      out.events.push_back(e);
      set_phase(t, Phase::kDone, out);
      return out;
    }
    return start_iteration(t, sampled_delta_o);
  }

  /// DONE once the agent sits at rest within the goal tolerance and its
  /// commitment stays there (the committed trajectory ends at the goal).
  bool done_check(double t) {
    if ((evaluate(traj_comm_, t, 0) - cfg_.goal).norm() > cfg_.goal_tol) return false;
    if (evaluate(traj_comm_, t, 1).norm() > 1e-6) return false;
    if (evaluate(traj_comm_, t, 2).norm() > 1e-6) return false;
    return (traj_comm_.end_position() - cfg_.goal).norm() <= cfg_.goal_tol;
  }

  /// Check the candidate against every stored trajectory over
  /// [t, end of the longest constraint], clamped extrapolation beyond ends.
  ConflictReport check_candidate(double t) {
    auto entries = store_.constraints(cfg_.peer_box);
    double end = std::max({traj_opt_->end_time(), store_.constraints_end_time(), t + 0.1});
    ConflictReport r = check_against_store(*traj_opt_, entries, cfg_.box, t, end);
    conflict_seq_ = r.conflicting_seq;
    return r;
  }

  void commit(double t, AgentOutputs& out) {
    if (t > t_switch_) {
      // the switch instant already passed (overlong iteration); committing
      // now would teleport, so the candidate is discarded instead
      ++counters_.late_discards;
      note_failure();
      traj_opt_.reset();
      set_phase(t, Phase::kIdle, out);
      return;
    }
    TrajectorySpline next = splice_commit(traj_comm_, *traj_opt_, t_switch_, t);
    auto gaps = continuity_gap(traj_comm_, next, t_switch_);
    traj_comm_ = next;
    traj_comm_.owner = cfg_.id;
    ++counters_.commits;
    consecutive_failures_ = 0;
    traj_opt_.reset();

    TraceEvent e{t, "commit", cfg_.id, {}};
    e.detail["t_switch"] = t_switch_;
    e.detail["gaps"] = {gaps[0], gaps[1], gaps[2]};
    e.detail["traj"] = spline_to_json(traj_comm_);
    out.events.push_back(e);

    broadcast(t, MsgKind::kComm, traj_comm_, out);
    set_phase(t, Phase::kIdle, out);
  }

  void broadcast(double t, MsgKind kind, const TrajectorySpline& traj, AgentOutputs& out) {
    TrajMessage msg;
    msg.kind = kind;
    msg.traj = traj;
    msg.traj.owner = cfg_.id;
    msg.traj.seq = ++seq_;
    msg.sender = cfg_.id;
    msg.seq = msg.traj.seq;
    msg.t_pub = t;
    if (kind == MsgKind::kOpt) last_opt_seq_ = msg.seq;
    TraceEvent e{t, "broadcast", cfg_.id, {}};
    e.detail["msg_kind"] = kind == MsgKind::kOpt ? "opt" : "comm";
    e.detail["seq"] = msg.seq;
    out.events.push_back(e);
    out.broadcasts.push_back(std::move(msg));
  }

  void set_phase(double t, Phase p, AgentOutputs& out) {
    if (p == phase_) return;
    phase_ = p;
    TraceEvent e{t, "phase", cfg_.id, {}};
    e.detail["phase"] = phase_name(p);
    out.events.push_back(e);
  }

  void note_failure() {
    if (++consecutive_failures_ >= cfg_.stall_budget) stalled_ = true;
  }

  AgentConfig cfg_;
  Phase phase_ = Phase::kIdle;
  TrajectorySpline traj_comm_;
  std::optional<TrajectorySpline> traj_opt_;
  PeerStore store_;
  AgentCounters counters_;
  std::uint64_t seq_ = 0;
  std::uint64_t last_opt_seq_ = 0;
  double t_switch_ = 0.0;
  double dc_deadline_ = 0.0;
  std::uint64_t snapshot_version_ = 0;
  std::uint64_t check_version_ = 0;
  std::uint64_t last_clean_version_ = 0;
  std::optional<ConflictReport> pending_check_;
  std::optional<std::uint64_t> conflict_seq_;
  int consecutive_failures_ = 0;
  bool stalled_ = false;
};

}  // namespace rmader
