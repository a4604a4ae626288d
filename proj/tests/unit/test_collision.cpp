#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rmader/collision.hpp"
#include "rmader/store.hpp"
#include "rmader/trefoil.hpp"

using namespace rmader;
using rmader::test::random_spline;
using rmader::test::straight_spline;

namespace {

/// Dense-sampling oracle: true iff a box overlap exists somewhere in the
/// window at 1 ms resolution.
bool sampled_overlap(const TrajectorySpline& a, const TrajectorySpline& b,
                     const AgentBox& combined, double t0, double t1) {
  for (double t = t0; t <= t1; t += 0.001)
    if (box_overlap(evaluate(a, t, 0) - evaluate(b, t, 0), combined)) return true;
  return false;
}

}  // namespace

TEST_CASE("identical control points are never separated") {
  std::array<Vec3, 4> ctrl{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  REQUIRE(!segment_separated(ctrl, ctrl, AgentBox{{0.1, 0.1, 0.1}}));
}

TEST_CASE("hover points 10 m apart with 0.4 m combined box are separated") {
  Vec3 a(0, 0, 0), b(10, 0, 0);
  std::array<Vec3, 4> ca{a, a, a, a}, cb{b, b, b, b};
  REQUIRE(segment_separated(ca, cb, AgentBox{{0.4, 0.4, 0.4}}));
}

TEST_CASE("separation verdicts are sound against the sampling oracle") {
  Rng rng(101);
  AgentBox combined{{0.4, 0.4, 0.5}};
  int separated_count = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    TrajectorySpline a = random_spline(rng);
    TrajectorySpline b = random_spline(rng);
    // a window inside one segment of each spline (segment_separated's
    // precondition: both control nets cover the same interval)
    double t0 = std::max(a.start_time(), b.start_time());
    double w1 = std::min({t0 + 1.0, a.knots[a.segment_index(t0) + 1],
                          b.knots[b.segment_index(t0) + 1]});
    if (w1 <= t0 + 1e-6) continue;
    auto ca = window_ctrl(a, t0, w1);
    auto cb = window_ctrl(b, t0, w1);
    if (segment_separated(ca, cb, combined)) {
      ++separated_count;
      REQUIRE(!sampled_overlap(a, b, combined, t0, w1));
    }
  }
  REQUIRE(separated_count > 100);  // the property must actually be exercised
}

TEST_CASE("hover far from a trefoil obstacle is conflict-free") {
  TrajectorySpline agent = hover_spline(0, 0, Vec3(0, 0, 0), 0.0, 4.0);
  TrefoilParams p;
  p.center = Vec3(100, 0, 0);
  p.scale = Vec3(1, 1, 1);
  p.angular_rate = 0.5;
  TrajectorySpline obstacle = obstacle_as_spline(p, 0.0, 10.0, 64, 1000);
  ConflictReport r = check_pair(agent, obstacle, AgentBox{{0.225, 0.225, 0.225}},
                                AgentBox{{0.225, 0.225, 0.225}}, 0.0, 10.0);
  REQUIRE(!r.in_conflict);
  REQUIRE(r.min_margin > 0.0);
}

TEST_CASE("head-on swap conflicts when the combined box first overlaps") {
  // A flies (-5,0,0) -> (5,0,0), B the reverse, both over [0,4] s. Centers
  // meet at t = 2; |dx| = 5|t-2| drops below the 0.8 m combined x-extent at
  // t = 1.84, which is where the first overlap must be reported.
  TrajectorySpline a = straight_spline(Vec3(-5, 0, 0), Vec3(5, 0, 0), 0.0, 4.0, 0);
  TrajectorySpline b = straight_spline(Vec3(5, 0, 0), Vec3(-5, 0, 0), 0.0, 4.0, 1);
  AgentBox half_a{{0.4, 0.4, 0.5}}, half_b{{0.4, 0.4, 0.5}};
  ConflictReport r = check_pair(a, b, half_a, half_b, 0.0, 4.0);
  REQUIRE(r.in_conflict);
  REQUIRE(r.min_margin < 0.0);
  REQUIRE(r.first_overlap_time.has_value());
  REQUIRE(*r.first_overlap_time == Catch::Approx(1.84).margin(0.002));

  double first_sampled = -1.0;
  AgentBox combined = AgentBox::combined(half_a, half_b);
  for (double t = 0.0; t <= 4.0; t += 0.001) {
    if (box_overlap(evaluate(a, t, 0) - evaluate(b, t, 0), combined)) {
      first_sampled = t;
      break;
    }
  }
  REQUIRE(first_sampled == Catch::Approx(1.84).margin(0.002));
}

TEST_CASE("check_pair is symmetric") {
  Rng rng(103);
  AgentBox box{{0.3, 0.3, 0.3}};
  for (int trial = 0; trial < 300; ++trial) {
    TrajectorySpline a = random_spline(rng);
    TrajectorySpline b = random_spline(rng);
    double t0 = std::min(a.start_time(), b.start_time());
    double t1 = std::max(a.end_time(), b.end_time());
    ConflictReport rab = check_pair(a, b, box, box, t0, t1);
    ConflictReport rba = check_pair(b, a, box, box, t0, t1);
    REQUIRE(rab.in_conflict == rba.in_conflict);
    REQUIRE(rab.min_margin == Catch::Approx(rba.min_margin).margin(1e-9));
  }
}

TEST_CASE("enlarging a box never turns a conflict into a non-conflict") {
  Rng rng(107);
  for (int trial = 0; trial < 200; ++trial) {
    TrajectorySpline a = random_spline(rng);
    TrajectorySpline b = random_spline(rng);
    AgentBox small{{0.2, 0.2, 0.2}};
    AgentBox big{{0.5, 0.5, 0.5}};
    double t0 = std::min(a.start_time(), b.start_time());
    double t1 = std::max(a.end_time(), b.end_time());
    bool small_conflict = check_pair(a, b, small, small, t0, t1).in_conflict;
    bool big_conflict = check_pair(a, b, big, big, t0, t1).in_conflict;
    if (small_conflict) REQUIRE(big_conflict);
  }
}

TEST_CASE("degenerate window raises") {
  TrajectorySpline a = hover_spline(0, 0, Vec3(0, 0, 0), 0.0);
  REQUIRE_THROWS_AS(check_pair(a, a, AgentBox{{0.1, 0.1, 0.1}}, AgentBox{{0.1, 0.1, 0.1}}, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("check_against_store finds conflicts in comm and opt entries") {
  AgentBox box{{0.4, 0.4, 0.5}};
  TrajectorySpline candidate = straight_spline(Vec3(-5, 0, 0), Vec3(5, 0, 0), 0.0, 4.0, 7);

  SECTION("empty store is clean with infinite margin") {
    ConflictReport r = check_against_store(candidate, {}, box, 0.0, 4.0);
    REQUIRE(!r.in_conflict);
    REQUIRE(std::isinf(r.min_margin));
  }

  PeerStore store;
  TrajectorySpline head_on = straight_spline(Vec3(5, 0, 0), Vec3(-5, 0, 0), 0.0, 4.0, 3);

  SECTION("conflicting comm entry names the peer") {
    store.seed_peer(3, head_on);
    ConflictReport r = check_against_store(candidate, store.constraints(box), box, 0.0, 4.0);
    REQUIRE(r.in_conflict);
    REQUIRE(r.pair.second == 3);
  }

  SECTION("a conflicting opt entry constrains too") {
    store.seed_peer(3, hover_spline(3, 0, Vec3(5, 5, 0), 0.0));
    TrajMessage opt;
    opt.kind = MsgKind::kOpt;
    opt.traj = head_on;
    opt.sender = 3;
    opt.seq = 1;
    store.enqueue(opt);
    store.drain();
    ConflictReport r = check_against_store(candidate, store.constraints(box), box, 0.0, 4.0);
    REQUIRE(r.in_conflict);
    REQUIRE(r.pair.second == 3);
  }
}

TEST_CASE("clean check_pair verdicts are sound on random spline pairs") {
  Rng rng(109);
  AgentBox box{{0.25, 0.25, 0.25}};
  int clean = 0;
  for (int trial = 0; trial < 150; ++trial) {
    TrajectorySpline a = random_spline(rng);
    TrajectorySpline b = random_spline(rng);
    double t0 = std::min(a.start_time(), b.start_time());
    double t1 = std::max(a.end_time(), b.end_time());
    ConflictReport r = check_pair(a, b, box, box, t0, t1);
    if (!r.in_conflict) {
      ++clean;
      REQUIRE(!sampled_overlap(a, b, AgentBox::combined(box, box), t0, t1));
    }
  }
  REQUIRE(clean > 10);
}
