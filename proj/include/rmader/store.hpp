#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "rmader/collision.hpp"
#include "rmader/trajectory.hpp"

namespace rmader {

enum class MsgKind { kOpt, kComm };

/// A broadcast trajectory: either a freshly optimized candidate (OPT) or a
/// committed trajectory (COMM).
struct TrajMessage {
  MsgKind kind = MsgKind::kOpt;
  TrajectorySpline traj;
  int sender = -1;
  std::uint64_t seq = 0;
  double t_pub = 0.0;
};

/// Per-peer constraint set: the peer's committed trajectory plus any
/// candidate trajectories received since the last COMM.
struct PeerEntry {
  TrajectorySpline comm;
  std::vector<TrajectorySpline> opts;
};

/// The trajectory store Q of one agent. Messages are queued on receipt and
/// applied only at check boundaries (drain), never mid-check:
///  - a COMM replaces the peer's committed entry and clears its candidates
///  - an OPT is appended, keeping the committed entry
/// Obstacle trajectories are fixed constraints that never change.
class PeerStore {
 public:
  /// Queue a message for the next drain. Duplicate (sender, seq) pairs are
  /// dropped so redelivery cannot double-apply.
  void enqueue(const TrajMessage& msg) {
    if (!seen_.insert({msg.sender, msg.seq}).second) return;
    pending_.push_back(msg);
  }

  bool has_pending() const { return !pending_.empty(); }

  /// Apply all queued updates in delivery order. Returns the number applied.
  std::size_t drain() {
    std::size_t n = pending_.size();
    for (const auto& msg : pending_) apply(msg);
    pending_.clear();
    if (n > 0) ++version_;
    return n;
  }

  /// First-contact registration: install a peer's known committed trajectory
  /// (e.g. its initial hover) without going through the message path.
  void seed_peer(int peer, const TrajectorySpline& comm) {
    peers_[peer] = PeerEntry{comm, {}};
    ++version_;
  }

  void add_obstacle(const TrajectorySpline& traj, const AgentBox& box) {
    obstacles_.push_back({traj, box});
    ++version_;
  }

  /// Monotone counter bumped whenever constraint content changes; lets a
  /// Delay Check skip re-verifying an unchanged store.
  std::uint64_t version() const { return version_; }

  const std::map<int, PeerEntry>& peers() const { return peers_; }
  std::size_t pending_count() const { return pending_.size(); }

  /// Flat constraint view in deterministic order: per peer (ascending id)
  /// the committed entry then the candidates, then the obstacles.
  std::vector<StoreEntryRef> constraints(const AgentBox& peer_box) const {
    std::vector<StoreEntryRef> out;
    for (const auto& [id, entry] : peers_) {
      out.push_back({&entry.comm, peer_box});
      for (const auto& o : entry.opts) out.push_back({&o, peer_box});
    }
    for (const auto& ob : obstacles_) out.push_back({&ob.traj, ob.box});
    return out;
  }

  /// Latest horizon end over all constraints (for check windows).
  double constraints_end_time() const {
    double end = 0.0;
    for (const auto& [id, entry] : peers_) {
      end = std::max(end, entry.comm.end_time());
      for (const auto& o : entry.opts) end = std::max(end, o.end_time());
    }
    for (const auto& ob : obstacles_) end = std::max(end, ob.traj.end_time());
    return end;
  }

 private:
  struct Obstacle {
    TrajectorySpline traj;
    AgentBox box;
  };

  void apply(const TrajMessage& msg) {
    auto& entry = peers_[msg.sender];
    if (msg.kind == MsgKind::kComm) {
      entry.comm = msg.traj;
      entry.opts.clear();
    } else {
      if (entry.comm.segments.empty()) {
        // OPT from a peer we have never heard from: hold its candidate's
        // start hover as the committed entry until a real COMM arrives
        entry.comm = hover_spline(msg.sender, 0, msg.traj.start_position(),
                                  msg.traj.start_time());
      }
      entry.opts.push_back(msg.traj);
    }
  }

  std::map<int, PeerEntry> peers_;
  std::vector<Obstacle> obstacles_;
  std::deque<TrajMessage> pending_;
  std::set<std::pair<int, std::uint64_t>> seen_;
  std::uint64_t version_ = 0;
};

}  // namespace rmader
