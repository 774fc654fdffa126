#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "icpsim/coupling.hpp"
#include "icpsim/errors.hpp"
#include "icpsim/rng.hpp"
#include "icpsim/stats.hpp"

using namespace icpsim;

TEST(Pairing, CoverTilesTheInnerBall) {
  Geometry g(1, 101, Boundary::Torus);
  const auto cover = pairing_cover(g, 2, 20);
  std::set<SiteIndex> seen;
  for (SiteIndex c : cover) {
    for (SiteIndex x : ball_indices(g, c, 2)) {
      EXPECT_TRUE(seen.insert(x).second) << "boxes overlap";
      EXPECT_LE(g.norm(x), 20);
    }
  }
  for (SiteIndex x : ball_indices(g, 0, 16)) EXPECT_TRUE(seen.count(x));
  EXPECT_THROW(pairing_cover(g, 4, 6), DomainError);
}

TEST(Pairing, TrivialAndPigeonhole) {
  Geometry g(1, 64, Boundary::Torus);
  const Occupancy zero(64, 0);
  const Occupancy xi = bernoulli_occupancy(g, 0.5, 3);
  auto p0 = good_pairing(g, zero, xi, 2, 20);
  ASSERT_TRUE(p0);
  EXPECT_TRUE(p0->pairs.empty());
  auto same = good_pairing(g, xi, xi, 2, 20);
  ASSERT_TRUE(same);
  for (auto [a, b] : same->pairs) EXPECT_EQ(a, b);
  // Three particles against two in the box around the first cover center.
  const SiteIndex c = pairing_cover(g, 2, 20).front();
  Occupancy a(64, 0), b(64, 0);
  const auto box = ball_indices(g, c, 2);
  a[box[0]] = a[box[1]] = a[box[2]] = 1;
  b[box[0]] = b[box[3]] = 1;
  EXPECT_FALSE(good_pairing(g, a, b, 2, 20));
}

TEST(Pairing, InjectiveWithinBoxes) {
  Geometry g(1, 101, Boundary::Torus);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Occupancy a = bernoulli_occupancy(g, 0.3, s), b = bernoulli_occupancy(g, 0.9, s + 1000);
    const auto p = good_pairing(g, a, b, 3, 30);
    if (!p) continue;
    std::set<SiteIndex> used;
    for (auto [x, y] : p->pairs) {
      EXPECT_TRUE(a[x] && b[y]);
      EXPECT_TRUE(used.insert(y).second);
      EXPECT_LE(g.distance(x, y), 6);
    }
  }
}

// L is large against sqrt(T), so outside information cannot reach B_0(L/4).
TEST(CoupleInterchange, NestedConfigurationsStayNested) {
  Geometry g(1, 512, Boundary::Torus);
  int successes = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Occupancy b = bernoulli_occupancy(g, 0.6, s), keep = bernoulli_occupancy(g, 0.5, 100 + s);
    Occupancy a(b.size());
    for (std::size_t x = 0; x < a.size(); ++x) a[x] = b[x] && keep[x];
    const CouplingOutcome o = couple_interchange(g, a, b, {2, 160, 16, 32, 1}, s);
    EXPECT_TRUE(o.domination_holds);
    successes += o.success;
    // Unmatched particles entering the cover from outside can still trip A1.
    if (!o.success) EXPECT_EQ(*o.cause, FailureCause::A1);
    if (s == 0) {
      const CouplingOutcome same = couple_interchange(g, b, b, {2, 160, 16, 32, 1}, s);
      for (SiteIndex x : ball_indices(g, 0, 40)) EXPECT_EQ(same.xi_at_T[x], same.xi2_at_T[x]);
    }
  }
  EXPECT_GE(successes, 4);
}

TEST(CoupleInterchange, FullAgainstEmptyFailsAtOnce) {
  Geometry g(1, 128, Boundary::Torus);
  const CouplingOutcome o = couple_interchange(g, Occupancy(128, 1), Occupancy(128, 0), {2, 24, 16, 32, 1}, 4);
  EXPECT_FALSE(o.success);
  ASSERT_TRUE(o.cause);
  EXPECT_EQ(*o.cause, FailureCause::A1);
  EXPECT_EQ(o.a1_time, 0.0);
}

TEST(CoupleInterchange, SuccessImpliesDomination) {
  Geometry g(1, 128, Boundary::Torus);
  for (std::uint64_t s = 0; s < 60; ++s) {
    const Occupancy a = bernoulli_occupancy(g, 0.3, s), b = bernoulli_occupancy(g, 0.8, 500 + s);
    const CouplingOutcome o = couple_interchange(g, a, b, {2, 24, 32, 64, 1}, s);
    if (o.success) {
      EXPECT_TRUE(o.domination_holds) << s;
      EXPECT_FALSE(o.cause);
    } else {
      ASSERT_TRUE(o.cause);
    }
  }
}

TEST(CoupleInterchange, CausesAreChronological) {
  Geometry g(1, 128, Boundary::Torus);
  for (std::uint64_t s = 0; s < 40; ++s) {
    const Occupancy a = bernoulli_occupancy(g, 0.45, s), b = bernoulli_occupancy(g, 0.55, 500 + s);
    const CouplingOutcome o = couple_interchange(g, a, b, {2, 24, 32, 64, 1}, s);
    if (!o.cause) continue;
    const double first = std::min({o.a1_time, o.a2_time, o.a3_time});
    const double at = *o.cause == FailureCause::A1 ? o.a1_time : *o.cause == FailureCause::A2 ? o.a2_time : o.a3_time;
    EXPECT_EQ(at, first);
  }
}

TEST(CoupleBrw, NoTransmissionNoBranching) {
  IcpParams q;
  q.geometry = Geometry(1, 256, Boundary::Torus);
  q.lambda = 0;
  q.v = 16;
  q.p = 0.5;
  q.initial_infected = {0, 1, 2};
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PairedRun r = couple_icp_brw(q, 2, s);
    EXPECT_TRUE(r.bijection_holds);
    EXPECT_EQ(r.attempts, 0u);
    EXPECT_EQ(r.infections.size(), 3u);
    EXPECT_TRUE(std::isinf(r.collision_time));
  }
}

TEST(CoupleBrw, NoParticlesNoBirths) {
  IcpParams q;
  q.geometry = Geometry(1, 256, Boundary::Torus);
  q.lambda = 2;
  q.v = 16;
  q.p = 0;
  q.initial_infected = {0};
  for (std::uint64_t s = 0; s < 30; ++s) {
    const PairedRun r = couple_icp_brw(q, 2, s);
    EXPECT_EQ(r.births, 0u);
    EXPECT_TRUE(r.bijection_holds);
    for (const auto& inf : r.infections) EXPECT_EQ(inf.max_gap, 0);
  }
}

TEST(CoupleBrw, BijectionAndBound) {
  IcpParams q;
  q.geometry = Geometry(1, 512, Boundary::Torus);
  q.lambda = 1.5;
  q.v = 64;
  q.p = 0.5;
  q.initial_infected = {0, 1, 2, 3};
  int held = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const PairedRun r = couple_icp_brw(q, 2, s);
    EXPECT_TRUE(r.bijection_holds);
    EXPECT_LE(r.births, r.attempts);
    EXPECT_EQ(r.infections.size(), 4 + r.births);
    if (r.hypotheses_hold) {
      ++held;
      EXPECT_TRUE(r.bound_holds) << s;
    }
    for (const auto& inf : r.infections) {
      if (inf.parent >= 0) EXPECT_LT(r.infections[inf.parent].birth, inf.birth);
    }
  }
  EXPECT_GT(held, 0);
}
