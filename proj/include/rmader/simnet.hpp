#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <tuple>
#include <variant>
#include <vector>

#include "rmader/agent.hpp"
#include "rmader/rng.hpp"
#include "rmader/trace.hpp"

namespace rmader {

/// Independent sub-seed for a named stream of randomness.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t s = master;
  s ^= splitmix64(a);
  a = s;
  s ^= splitmix64(b) + 0x9e3779b97f4a7c15ULL;
  b = s;
  s ^= splitmix64(c) + (a << 1) + (b >> 1);
  return splitmix64(s);
}

/// Per-message latency generation. FIXED injects a constant delay into every
/// message; FIXED_PLUS_JITTER adds a bounded random term (uniform or
/// truncated exponential) so that introd <= delta_actual <= introd +
/// jitter_max is provable; SCRIPTED delivers selected messages at exact
/// absolute times (conformance scripts), with a fixed default for the rest.
struct DelayModel {
  enum class Mode { kFixed, kFixedPlusJitter, kScripted };
  enum class Jitter { kUniform, kTruncatedExp };

  Mode mode = Mode::kFixed;
  double introd = 0.0;
  Jitter jitter = Jitter::kUniform;
  double jitter_max = 0.0;
  double jitter_rate = 100.0;  // 1/mean of the truncated exponential
  double scripted_default = 0.0;
  /// (sender, receiver, seq) -> absolute delivery time
  std::map<std::tuple<int, int, std::uint64_t>, double> scripted;

  double max_bound() const {
    return mode == Mode::kFixedPlusJitter ? introd + jitter_max : introd;
  }

  double delivery_time(const TrajMessage& msg, int receiver, Rng& rng) const {
    switch (mode) {
      case Mode::kFixed:
        return msg.t_pub + introd;
      case Mode::kFixedPlusJitter: {
        double j = jitter == Jitter::kUniform
                       ? rng.uniform(0.0, jitter_max)
                       : std::min(-std::log(1.0 - rng.uniform01()) / jitter_rate, jitter_max);
        return msg.t_pub + introd + j;
      }
      default: {
        auto it = scripted.find({msg.sender, receiver, msg.seq});
        double t = it != scripted.end() ? it->second : msg.t_pub + scripted_default;
        return std::max(t, msg.t_pub);
      }
    }
  }
};

/// Per-message delivery record; delta = t_recv - t_pub >= 0.
struct DelayRecord {
  int sender = -1;
  int receiver = -1;
  std::uint64_t seq = 0;
  double t_pub = 0.0;
  double t_recv = 0.0;
  double delta() const { return t_recv - t_pub; }
};

struct DelayLedger {
  std::vector<DelayRecord> records;
  double max_observed = 0.0;

  void add(const DelayRecord& r) {
    records.push_back(r);
    max_observed = std::max(max_observed, r.delta());
  }
};

struct MonitorViolation {
  DelayRecord record;
  double bound;  // the receiver's delta_dc
};

/// Guarantee-precondition check: every delivered message whose realized
/// delay exceeded the receiver's Delay Check window. An empty list certifies
/// that delta_max <= delta_dc held throughout the run, which is what the
/// collision-free guarantee of the delay-check variants rests on.
inline std::vector<MonitorViolation> guarantee_monitor(const DelayLedger& ledger,
                                                       const std::map<int, double>& delta_dc) {
  std::vector<MonitorViolation> out;
  for (const auto& r : ledger.records) {
    auto it = delta_dc.find(r.receiver);
    if (it == delta_dc.end()) continue;
    if (r.delta() > it->second + 1e-12) out.push_back({r, it->second});
  }
  return out;
}

/// Sampled optimization latency per planning iteration.
struct PlannerLatency {
  enum class Kind { kFixed, kUniform, kSequence };
  Kind kind = Kind::kUniform;
  double fixed = 0.05;
  double lo = 0.03, hi = 0.08;
  std::vector<double> sequence;  // per iteration, last value repeats

  double sample(std::size_t iteration, Rng& rng) const {
    switch (kind) {
      case Kind::kFixed:
        return fixed;
      case Kind::kUniform:
        return rng.uniform(lo, hi);
      default:
        if (sequence.empty()) return fixed;
        return sequence[std::min(iteration, sequence.size() - 1)];
    }
  }
};

/// Canned trajectory source for conformance scripts: broadcasts fixed
/// messages at fixed times and ignores everything it receives. It appears in
/// traces as a hovering body so offline audits constrain against it.
struct ScriptedPublisher {
  int id = -1;
  Vec3 position{0, 0, 0};
  AgentBox box{{0.3, 0.3, 0.3}};
  double delta_dc = 1.0;  // bound applied to messages it receives
  std::vector<TrajMessage> emissions;
};

struct RunStatus {
  double t_final = 0.0;
  std::string status;  // all_done | time_limit | queue_exhausted
};

/// Deterministic discrete-event engine: one clock, one event queue, a
/// broadcast bus with injected per-receiver delays, and periodic agent
/// ticks. Single-threaded by contract; identical (config, seed) produce an
/// identical event sequence, trace, and ledger. One engine drives one run.
class Engine {
 public:
  using PlannerFn = std::function<PlanResult(const PlanRequest&, std::uint64_t)>;

  Engine(double tick, std::uint64_t seed) : tick_(tick), seed_(seed), bus_rng_(Rng::stream(seed, 1)) {}

  void add_agent(const AgentConfig& cfg, double start_offset, PlannerFn planner = nullptr,
                 std::optional<PlannerLatency> latency = std::nullopt) {
    agents_.push_back(AgentSlot{Agent(cfg), start_offset,
                                planner ? std::move(planner) : default_planner(), 0,
                                std::move(latency)});
  }

  void add_obstacle(const TrajectorySpline& traj, const AgentBox& box) {
    obstacles_.push_back({traj, box});
  }

  void add_scripted_publisher(ScriptedPublisher pub) { scripted_.push_back(std::move(pub)); }

  void set_delay_model(DelayModel m) { delay_ = std::move(m); }
  void set_planner_latency(PlannerLatency l) { latency_ = std::move(l); }
  void set_seed_initial_comms(bool b) { seed_initial_comms_ = b; }
  void set_header(json header) { header_ = std::move(header); }

  const Trace& trace() const { return trace_; }
  const DelayLedger& ledger() const { return ledger_; }
  std::size_t agent_count() const { return agents_.size(); }
  const Agent& agent(std::size_t i) const { return agents_[i].agent; }

  std::map<int, double> delta_dc_by_agent() const {
    std::map<int, double> out;
    for (const auto& s : agents_) out[s.agent.config().id] = s.agent.config().delta_dc;
    return out;
  }

  /// Process events in order until t_end, all agents DONE, or queue
  /// exhaustion. One engine instance runs once.
  RunStatus run_until(double t_end) {
    setup(t_end);
    RunStatus status;
    while (!queue_.empty()) {
      Event ev = queue_.top();
      if (ev.t > t_end + 1e-12) {
        status = {t_end, "time_limit"};
        finish(t_end, status.status);
        return status;
      }
      queue_.pop();
      now_ = ev.t;
      dispatch(ev);
      if (all_done()) {
        status = {now_, "all_done"};
        finish(now_, status.status);
        return status;
      }
    }
    status = {now_, "queue_exhausted"};
    finish(now_, status.status);
    return status;
  }

 private:
  struct AgentSlot {
    Agent agent;
    double start_offset;
    PlannerFn planner;
    std::size_t iterations;
    std::optional<PlannerLatency> latency;
  };

  struct Broadcast {
    TrajMessage msg;
  };
  struct Delivery {
    int receiver_index;  // agents_ index, or -1-id for scripted sinks
    TrajMessage msg;
  };
  struct PlannerDone {
    int agent_index;
    PlanResult result;
  };
  struct CheckDone {
    int agent_index;
  };
  struct AgentTick {
    int agent_index;
  };
  using Payload = std::variant<Broadcast, Delivery, PlannerDone, CheckDone, AgentTick>;

  // tie-break: scripted broadcasts, deliveries, subroutine completions,
  // agent ticks; equal timestamps resolved by insertion order
  struct Event {
    double t;
    int cls;
    std::uint64_t counter;
    Payload payload;
    bool operator>(const Event& o) const {
      return std::tie(t, cls, counter) > std::tie(o.t, o.cls, o.counter);
    }
  };

  static PlannerFn default_planner() {
    return [](const PlanRequest& req, std::uint64_t seed) { return plan(req, seed); };
  }

  void push(double t, int cls, Payload p) { queue_.push(Event{t, cls, counter_++, std::move(p)}); }

  void setup(double t_end) {
    json header = header_;
    header["tick"] = tick_;
    header["t_end"] = t_end;
    header["seed"] = seed_;
    trace_.push_back({0.0, "run_header", -1, header});

    if (seed_initial_comms_) {
      for (auto& s : agents_) {
        for (const auto& o : agents_)
          if (o.agent.config().id != s.agent.config().id)
            s.agent.store().seed_peer(o.agent.config().id, o.agent.committed());
        for (const auto& pub : scripted_)
          s.agent.store().seed_peer(pub.id, hover_spline(pub.id, 0, pub.position, 0.0));
      }
    }
    for (auto& s : agents_) {
      for (const auto& ob : obstacles_) s.agent.store().add_obstacle(ob.traj, ob.box);
      trace_.push_back(s.agent.init_event());
    }
    for (const auto& pub : scripted_) {
      TraceEvent e{0.0, "agent_init", pub.id, {}};
      e.detail["start"] = vec3_to_json(pub.position);
      e.detail["goal"] = vec3_to_json(pub.position);
      e.detail["box"] = vec3_to_json(pub.box.half);
      e.detail["delta_dc"] = pub.delta_dc;
      e.detail["variant"] = "scripted";
      e.detail["initial_comm"] = spline_to_json(hover_spline(pub.id, 0, pub.position, 0.0));
      trace_.push_back(e);
    }
    for (const auto& ob : obstacles_) {
      TraceEvent e{0.0, "obstacle_init", ob.traj.owner, {}};
      e.detail["traj"] = spline_to_json(ob.traj);
      e.detail["box"] = vec3_to_json(ob.box.half);
      trace_.push_back(e);
    }

    for (std::size_t i = 0; i < agents_.size(); ++i)
      push(agents_[i].start_offset, 4, AgentTick{static_cast<int>(i)});
    for (const auto& pub : scripted_)
      for (const auto& msg : pub.emissions) push(msg.t_pub, 0, Broadcast{msg});
  }

  void finish(double t, const std::string& status) {
    TraceEvent e{t, "scenario_end", -1, {}};
    e.detail["status"] = status;
    trace_.push_back(e);
  }

  bool all_done() const {
    if (agents_.empty()) return false;
    for (const auto& s : agents_)
      if (!s.agent.done()) return false;
    return true;
  }

  void fan_out(const TrajMessage& msg) {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      if (agents_[i].agent.config().id == msg.sender) continue;
      double t_recv = delay_.delivery_time(msg, agents_[i].agent.config().id, bus_rng_);
      push(t_recv, 1, Delivery{static_cast<int>(i), msg});
    }
    for (const auto& pub : scripted_) {
      if (pub.id == msg.sender) continue;
      double t_recv = delay_.delivery_time(msg, pub.id, bus_rng_);
      push(t_recv, 1, Delivery{-1 - pub.id, msg});
    }
  }

  /// Apply one protocol step's side effects: trace records, broadcasts onto
  /// the bus, and the synchronous plan whose result surfaces after delta_o.
  void absorb(double t, std::size_t idx, double delta_o, AgentOutputs&& out) {
    for (auto& e : out.events) trace_.push_back(std::move(e));
    for (auto& msg : out.broadcasts) fan_out(msg);
    if (out.plan_request) {
      AgentSlot& slot = agents_[idx];
      std::uint64_t plan_seed =
          mix_seed(seed_, 2, static_cast<std::uint64_t>(slot.agent.config().id), slot.iterations);
      PlanResult result = slot.planner(*out.plan_request, plan_seed);
      push(t + delta_o, 2, PlannerDone{static_cast<int>(idx), std::move(result)});
      ++slot.iterations;
    }
  }

  void dispatch(const Event& ev) {
    if (const auto* b = std::get_if<Broadcast>(&ev.payload)) {
      TraceEvent e{ev.t, "broadcast", b->msg.sender, {}};
      e.detail["msg_kind"] = b->msg.kind == MsgKind::kOpt ? "opt" : "comm";
      e.detail["seq"] = b->msg.seq;
      trace_.push_back(e);
      fan_out(b->msg);
      return;
    }
    if (const auto* d = std::get_if<Delivery>(&ev.payload)) {
      int receiver_id = d->receiver_index >= 0 ? agents_[d->receiver_index].agent.config().id
                                               : -1 - d->receiver_index;
      ledger_.add({d->msg.sender, receiver_id, d->msg.seq, d->msg.t_pub, ev.t});
      TraceEvent e{ev.t, "delivery", receiver_id, {}};
      e.detail["sender"] = d->msg.sender;
      e.detail["seq"] = d->msg.seq;
      e.detail["msg_kind"] = d->msg.kind == MsgKind::kOpt ? "opt" : "comm";
      e.detail["t_pub"] = d->msg.t_pub;
      e.detail["delta"] = ev.t - d->msg.t_pub;
      trace_.push_back(e);
      if (d->receiver_index >= 0) agents_[d->receiver_index].agent.on_message(d->msg);
      return;
    }
    if (const auto* p = std::get_if<PlannerDone>(&ev.payload)) {
      AgentSlot& slot = agents_[p->agent_index];
      absorb(ev.t, p->agent_index, 0.0, slot.agent.finish_optimization(ev.t, p->result));
      if (slot.agent.phase() == Phase::kChecking)
        push(ev.t + slot.agent.config().check_latency, 3, CheckDone{p->agent_index});
      return;
    }
    if (const auto* c = std::get_if<CheckDone>(&ev.payload)) {
      AgentSlot& slot = agents_[c->agent_index];
      absorb(ev.t, c->agent_index, 0.0, slot.agent.check_done(ev.t));
      return;
    }
    const auto& tk = std::get<AgentTick>(ev.payload);
    AgentSlot& slot = agents_[tk.agent_index];
    if (slot.agent.done()) return;
    double delta_o = 0.0;
    if (slot.agent.phase() == Phase::kIdle) {
      Rng lat_rng(mix_seed(seed_, 3, static_cast<std::uint64_t>(slot.agent.config().id),
                           slot.iterations));
      delta_o = (slot.latency ? *slot.latency : latency_).sample(slot.iterations, lat_rng);
    }
    absorb(ev.t, tk.agent_index, delta_o, slot.agent.tick(ev.t, delta_o));
    if (!slot.agent.done()) push(ev.t + tick_, 4, AgentTick{tk.agent_index});
  }

  double tick_;
  std::uint64_t seed_;
  Rng bus_rng_;
  DelayModel delay_;
  PlannerLatency latency_;
  bool seed_initial_comms_ = true;
  json header_;

  std::vector<AgentSlot> agents_;
  struct Obstacle {
    TrajectorySpline traj;
    AgentBox box;
  };
  std::vector<Obstacle> obstacles_;
  std::vector<ScriptedPublisher> scripted_;

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::uint64_t counter_ = 0;
  double now_ = 0.0;

  Trace trace_;
  DelayLedger ledger_;
};

}  // namespace rmader
