#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icpsim/errors.hpp"
#include "icpsim/interchange.hpp"
#include "icpsim/rng.hpp"
#include "oracles/oracles.hpp"

using namespace icpsim;

namespace {

MarkSet jumps_only(const Geometry& g, double v, double t, std::uint64_t seed) {
  SampleOptions o;
  o.recoveries = o.transmissions = false;
  return sample_marks(g, {v, 0}, t, seed, o);
}

}  // namespace

TEST(Flow, NoMarksIsIdentity) {
  const MarkSet m(5.0, 0, {});
  for (SiteIndex x = 0; x < 10; ++x) {
    EXPECT_EQ(flow(m, x, 0, 5), x);
    EXPECT_EQ(flow(m, x, 4, 1), x);
  }
}

TEST(Flow, SingleSwap) {
  const MarkSet m(2.0, 0, {Mark{1.0, 0, MarkKind::Jump, 3, 4}});
  EXPECT_EQ(flow(m, 3, 0.5, 1.5), 4u);
  EXPECT_EQ(flow(m, 4, 0.5, 1.5), 3u);
  EXPECT_EQ(flow(m, 3, 1.5, 2.0), 3u);
  EXPECT_EQ(flow(m, 4, 1.5, 0.5), 3u);
  Occupancy xi(8, 0);
  xi[3] = 1;
  const Occupancy after = evolve(xi, m, 2.0);
  EXPECT_EQ(after[4], 1);
  EXPECT_EQ(after[3], 0);
}

TEST(Flow, TimesOutsideWindowRejected) {
  const MarkSet m(2.0, 0, {});
  EXPECT_THROW(flow(m, 0, 0, 3), DomainError);
  EXPECT_THROW(flow(m, 0, -1, 1), DomainError);
}

TEST(Flow, RoundTripAndBijection) {
  Geometry g(2, 8, Boundary::Torus);
  const MarkSet m = jumps_only(g, 2, 5, 11);
  Rng rng(5);
  for (int q = 0; q < 1000; ++q) {
    const auto x = static_cast<SiteIndex>(rng.below(g.site_count()));
    const double t = rng.uniform() * 5;
    EXPECT_EQ(flow(m, flow(m, x, 0, t), t, 0), x);
  }
  for (double t : {0.5, 2.0, 5.0}) {
    std::vector<std::uint8_t> hit(g.site_count(), 0);
    for (SiteIndex x = 0; x < g.site_count(); ++x) hit[flow(m, x, 0, t)]++;
    EXPECT_TRUE(std::all_of(hit.begin(), hit.end(), [](std::uint8_t h) { return h == 1; }));
  }
}

TEST(Evolve, MatchesFlowAndConserves) {
  Geometry g(1, 40, Boundary::HardWall);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MarkSet m = jumps_only(g, 1.5, 3, s);
    const Occupancy xi0 = bernoulli_occupancy(g, 0.4, s + 100);
    for (double t : {0.0, 1.0, 3.0}) {
      const Occupancy xi = evolve(xi0, m, t);
      for (SiteIndex x = 0; x < g.site_count(); ++x) EXPECT_EQ(xi[x], xi0[flow(m, x, t, 0)]);
      EXPECT_EQ(std::accumulate(xi.begin(), xi.end(), 0), std::accumulate(xi0.begin(), xi0.end(), 0));
    }
  }
  const Occupancy full(g.site_count(), 1);
  EXPECT_EQ(evolve(full, jumps_only(g, 1, 2, 3), 2), full);
}

TEST(Meet, OracleSanity) {
  // The difference-walk solution is a probability that grows with time
  // budget relative to distance and stays bounded away from zero.
  double prev = 1;
  for (int ell : {1, 2, 4, 8}) {
    const double p = oracle::meet_d1(ell);
    EXPECT_GT(p, 0.2);
    EXPECT_LT(p, 1.0);
    EXPECT_LE(p, prev + 1e-12);
    prev = p;
  }
}

TEST(Meet, MonteCarloMatchesOracle) {
  for (int ell : {1, 2}) {
    const Estimate e = meet_probability(1, ell, 20000, 3);
    const double exact = oracle::meet_d1(ell);
    const double sigma = std::sqrt(exact * (1 - exact) / 20000);
    EXPECT_NEAR(e.mean, exact, 4 * sigma) << "ell=" << ell;
  }
}

TEST(Meet, ExhaustiveIsNoLargerThanAntipodal) {
  MeetOptions o;
  o.exhaustive = true;
  const Estimate all = meet_probability(1, 2, 4000, 9, o);
  const Estimate anti = meet_probability(1, 2, 4000, 9);
  EXPECT_LE(all.mean, anti.ci_high);
}

TEST(Discrepancy, VanishesForTinyTime) {
  Geometry g(1, 64, Boundary::Torus);
  EXPECT_EQ(discr_ip(g, 2, 6, 1e-6, 2000, 1).mean, 0.0);
}

TEST(Discrepancy, EventOnHandBuiltMarks) {
  Geometry g(1, 32, Boundary::Torus);
  // A particle on the sphere of radius 3 walks to radius 1.
  const SiteIndex x3 = 3, x2 = 2, x1 = 1;
  const MarkSet m(1.0, 0, {Mark{0.2, 0, MarkKind::Jump, x2, x3}, Mark{0.4, 1, MarkKind::Jump, x1, x2}});
  EXPECT_TRUE(discr_event(g, m, 1, 3, 1.0));
  EXPECT_FALSE(discr_event(g, m, 1, 3, 0.3));
}

TEST(Discrepancy, BelowBoundAndDecreasingInL) {
  Geometry g(1, 64, Boundary::Torus);
  double prev = 1;
  for (int L : {6, 8, 10}) {
    const Estimate e = discr_ip(g, 2, L, 1, 20000, 5);
    EXPECT_LE(e.ci_low, discr_ip_bound(1, 2, L, 1));
    EXPECT_LE(e.mean, prev);
    prev = e.mean;
  }
  EXPECT_THROW(discr_ip(Geometry(1, 20, Boundary::Torus), 2, 10, 1, 10, 1), DomainError);
}

TEST(Density, TrivialConfigurations) {
  Geometry g(1, 64, Boundary::Torus);
  const Occupancy ones(g.site_count(), 1), zeros(g.site_count(), 0);
  const MarkSet m = jumps_only(g, 1, 2, 4);
  EXPECT_FALSE(density_deviation(g, ones, m, {2, 10, 2, 0.8, Direction::Down}));
  EXPECT_TRUE(density_deviation(g, ones, m, {2, 10, 2, 0.8, Direction::Up}));
  EXPECT_EQ(estimate_g(g, zeros, {2, 10, 2, 0.3, Direction::Up}, 200, 1).mean, 0.0);
  EXPECT_EQ(estimate_g(g, ones, {2, 10, 2, 0.8, Direction::Down}, 200, 1).mean, 0.0);
  EXPECT_EQ(estimate_g(g, zeros, {2, 10, 2, 0.3, Direction::Down}, 200, 1).mean, 1.0);
}

TEST(Density, SmallAndDecreasingInBoxRadius) {
  Geometry g(1, 64, Boundary::Torus);
  const Occupancy xi = bernoulli_occupancy(g, 0.5, 77);
  double prev = 1;
  for (int ell : {2, 3, 4}) {
    const Estimate e = estimate_g(g, xi, {ell, 12, 2, 0.9, Direction::Up}, 2000, 3);
    EXPECT_LE(e.mean, prev + 1e-12);
    prev = e.mean;
  }
  EXPECT_LT(prev, 0.5);
}

TEST(Density, AveragedUpDeviationBelowBound) {
  Geometry g(1, 64, Boundary::Torus);
  Accumulator acc;
  for (std::uint64_t r = 0; r < 400; ++r) {
    const Occupancy xi = bernoulli_occupancy(g, 0.3, 5000 + r);
    acc.add(density_deviation(g, xi, jumps_only(g, 1, 1, 9000 + r), {4, 8, 1, 0.9, Direction::Up}));
  }
  EXPECT_LE(acc.mean(), g_bound(1, 4, 8, 1, 0.3, 0.9));
}

TEST(TimeTogether, DecreasesWithSpeed) {
  Geometry g(1, 64, Boundary::Torus);
  double prev = 1e9;
  for (double v : {1.0, 4.0, 16.0}) {
    const Estimate e = time_together(g, v, 0, 1, 4, 2000, 12);
    EXPECT_TRUE(std::isfinite(e.mean));
    EXPECT_LT(e.mean, prev);
    prev = e.mean;
  }
}
