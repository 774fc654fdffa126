#include <gtest/gtest.h>

#include <cmath>

#include "icpsim/brw.hpp"
#include "icpsim/errors.hpp"
#include "icpsim/stats.hpp"

using namespace icpsim;

TEST(Brw, PureDeathIsExponential) {
  Geometry g(1, 64, Boundary::Torus);
  const int R = 20000;
  int alive = 0;
  for (int i = 0; i < R; ++i) alive += run_brw(g, {0}, 0, 0, 1.0, i).alive_count();
  const double p = std::exp(-1.0);
  EXPECT_NEAR(alive / double(R), p, 3 * std::sqrt(p * (1 - p) / R));
}

TEST(Brw, NoBranchingNoGrowth) {
  Geometry g(1, 64, Boundary::Torus);
  for (int i = 0; i < 50; ++i) {
    const WalkerForest f = run_brw(g, {0, 0, 5, 9}, 0, 2, 3.0, i);
    EXPECT_EQ(f.walkers.size(), 4u);
  }
}

TEST(Brw, ForestStructure) {
  Geometry g(1, 128, Boundary::Torus);
  const WalkerForest f = run_brw(g, {0}, 2, 1, 3.0, 4);
  for (const Walker& w : f.walkers) {
    if (w.parent >= 0) {
      const Walker& p = f.walkers[w.parent];
      EXPECT_LT(static_cast<std::uint64_t>(w.parent), w.id);
      EXPECT_GE(w.birth, p.birth);
      EXPECT_LE(w.birth, p.death);
    }
    EXPECT_LT(w.position, g.site_count());
  }
}

TEST(Brw, ExtinctionProbability) {
  struct Case {
    double beta;
    std::uint64_t n0;
    double q;
  };
  for (const Case c : {Case{2, 1, 0.5}, Case{2, 3, 0.125}, Case{0.5, 1, 1.0}}) {
    const auto ex = brw_extinction(c.beta, c.n0, 40, 20000, 17);
    EXPECT_LE(ex.extinct.ci_low, c.q + 1e-9) << c.beta << " " << c.n0;
    EXPECT_GE(ex.extinct.ci_high, c.q - 1e-9 - ex.cap_bias_bound) << c.beta << " " << c.n0;
  }
}

TEST(Brw, MeanPopulation) {
  Geometry g(1, 512, Boundary::Torus);
  for (double beta : {0.5, 2.0}) {
    const double t = 2;
    Accumulator acc;
    for (int i = 0; i < 4000; ++i) acc.add(run_brw(g, {0}, beta, 1, t, 1000 + i).alive_count());
    const double mean = std::exp((beta - 1) * t);
    EXPECT_NEAR(acc.mean(), mean, 3 * std::sqrt(acc.variance() / acc.count)) << beta;
  }
}

TEST(Brw, DisplacementSymmetric) {
  Geometry g(1, 401, Boundary::Torus);
  int right = 0, left = 0;
  for (int i = 0; i < 4000; ++i) {
    const WalkerForest f = run_brw(g, {0}, 0, 2, 0.7, i);
    const Walker& w = f.walkers[0];
    const int x = g.axis_delta(0, g.coord(w.position, 0));
    right += x > 0;
    left += x < 0;
  }
  const double n = right + left;
  EXPECT_NEAR(right - left, 0, 3 * std::sqrt(n));
}

TEST(Brw, Occupancy) {
  Geometry g(1, 31, Boundary::Torus);
  WalkerForest empty;
  EXPECT_EQ(occupancy(g, empty, 0, 3), 0u);
  const WalkerForest still = run_brw(g, {4, 4, 4}, 0, 0, 1e-9, 1);
  EXPECT_EQ(occupancy(g, still, 4, 0), 3u);
  const WalkerForest f = run_brw(g, {0}, 1.5, 1, 2.0, 3);
  std::size_t total = 0;
  for (SiteIndex c = 0; c < 31; ++c) total += occupancy(g, f, c, 0);
  EXPECT_EQ(total, f.alive_count());
}

TEST(Brw, MeanFieldParameters) {
  const MeanField a = mean_field_params(1, 0.5, 1.5);
  EXPECT_DOUBLE_EQ(a.beta, 1.5);
  EXPECT_NEAR(*a.alpha, 1.0 / 6, 1e-15);
  EXPECT_NEAR(*a.k, 12, 1e-12);
  const MeanField b = mean_field_params(2, 1, 0.5);
  EXPECT_DOUBLE_EQ(b.beta, 2);
  EXPECT_DOUBLE_EQ(*b.alpha, 0.25);
  EXPECT_DOUBLE_EQ(*b.k, 8);
  EXPECT_THROW(mean_field_params(1, 0.5, 1.0), DomainError);
  const MeanField sub = mean_field_params(1, 0.5, 0.5);
  EXPECT_FALSE(sub.supercritical);
  EXPECT_FALSE(sub.alpha.has_value());
}

TEST(Brw, CalibrationFindsAnH) {
  Geometry g(1, 301, Boundary::Torus);
  const auto cal = calibrate_h0(g, 2, 16, 1, 0.5, {1, 2, 4, 6, 8}, 200, 5);
  ASSERT_FALSE(cal.sweep.empty());
  if (cal.h0) EXPECT_GE(cal.sweep.back().frequency.mean, 0.5);
}
