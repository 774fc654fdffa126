#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "icpsim/errors.hpp"
#include "icpsim/icp.hpp"
#include "icpsim/rng.hpp"
#include "icpsim/stats.hpp"
#include "oracles/oracles.hpp"

using namespace icpsim;

namespace {

IcpParams params1(int n, double lambda, double v, double p) {
  IcpParams q;
  q.geometry = Geometry(1, n, Boundary::Torus);
  q.lambda = lambda;
  q.v = v;
  q.p = p;
  return q;
}

bool subset(const Configuration& a, const Configuration& b) {
  for (std::size_t x = 0; x < a.states.size(); ++x) {
    if (a.states[x] == State::Infected && b.states[x] != State::Infected) return false;
  }
  return true;
}

}  // namespace

TEST(Icp, LoneInfectionRecoversExponentially) {
  const IcpParams q = params1(64, 0, 1, 0.5);
  const double t = 1.0;
  for (Engine e : {Engine::FrozenMarks, Engine::Dynamic, Engine::Streamed}) {
    const int R = 20000;
    int alive = 0;
    for (int i = 0; i < R; ++i) {
      RunOptions o;
      o.log = LogLevel::None;
      alive += run(sample_initial(q, i), q, t, e, 1000 + i, o).final_state.infected_count() > 0;
    }
    const double p = std::exp(-t);
    EXPECT_NEAR(alive / double(R), p, 3 * std::sqrt(p * (1 - p) / R)) << to_string(e);
  }
}

TEST(Icp, ClassicalContactProcessMonotoneInLambda) {
  auto survival = [](double lambda) {
    const IcpParams q = params1(256, lambda, 0, 1);
    int alive = 0;
    for (int i = 0; i < 400; ++i) {
      RunOptions o;
      o.log = LogLevel::None;
      o.stop_when_extinct = true;
      alive += !run(sample_initial(q, i), q, 20, Engine::Dynamic, i, o).extinct;
    }
    return alive / 400.0;
  };
  EXPECT_GT(survival(2.0), survival(0.5));
}

TEST(Icp, UnitRules) {
  Configuration z;
  z.states = {State::Infected, State::Empty, State::Healthy, State::Infected};
  Event ev = apply_mark(z, Mark{0.1, 0, MarkKind::Transmission, 0, 1});
  EXPECT_EQ(z.states[1], State::Empty);
  EXPECT_EQ(ev.outcome, Outcome::OntoEmpty);
  ev = apply_mark(z, Mark{0.2, 1, MarkKind::Transmission, 3, 2});
  EXPECT_EQ(z.states[2], State::Infected);
  EXPECT_EQ(ev.outcome, Outcome::OntoHealthy);
  EXPECT_EQ(infected_count(z), 3u);
  apply_mark(z, Mark{0.3, 2, MarkKind::Recovery, 3, 3});
  EXPECT_EQ(infected_count(z), 2u);
  apply_mark(z, Mark{0.4, 3, MarkKind::Recovery, 1, 1});
  EXPECT_EQ(z.states[1], State::Empty);
  apply_mark(z, Mark{0.5, 4, MarkKind::Jump, 0, 1});
  EXPECT_EQ(z.states[0], State::Empty);
  EXPECT_EQ(z.states[1], State::Infected);
  // Transmission from a healthy particle does nothing.
  apply_mark(z, Mark{0.6, 5, MarkKind::Transmission, 3, 0});
  EXPECT_EQ(z.states[0], State::Empty);
}

TEST(Icp, InfectedCountExamples) {
  const IcpParams q = params1(32, 1, 1, 1);
  Configuration z = configuration_from(Occupancy(32, 1), {});
  EXPECT_EQ(z.infected_count(), 0u);
  z = configuration_from(Occupancy(32, 1), {0, 5, 9});
  EXPECT_EQ(z.infected_count(), 3u);
}

TEST(Icp, ReplayReproducesFinalState) {
  for (Engine e : {Engine::FrozenMarks, Engine::Dynamic, Engine::Streamed}) {
    for (std::uint64_t s = 0; s < 30; ++s) {
      const IcpParams q = params1(48, 1.2, 2, 0.6);
      const Trajectory tr = run(sample_initial(q, s), q, 5, e, s);
      EXPECT_EQ(replay(tr), tr.final_state) << to_string(e) << " seed " << s;
      EXPECT_EQ(tr.final_state.occupancy().size(), 48u);
    }
  }
}

TEST(Icp, ProjectionFollowsTheInterchangeProcess) {
  const IcpParams q = params1(40, 1.5, 2, 0.5);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const MarkSet m = sample_marks(q.geometry, {q.v, q.lambda}, 3, s);
    const Configuration z0 = sample_initial(q, s);
    const Trajectory tr = run_marks(z0, q.geometry, m, 3);
    EXPECT_EQ(tr.final_state.occupancy(), evolve(z0.occupancy(), m, 3));
    for (std::size_t x = 0; x < 40; ++x) {
      if (tr.final_state.states[x] == State::Infected) EXPECT_NE(tr.final_state.occupancy()[x], 0);
    }
  }
}

TEST(Icp, MonotoneInInitialInfections) {
  const IcpParams q = params1(40, 1.5, 2, 0.7);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const MarkSet m = sample_marks(q.geometry, {q.v, q.lambda}, 4, s);
    Occupancy xi = bernoulli_occupancy(q.geometry, 0.7, s);
    xi[0] = xi[3] = 1;
    const Trajectory small = run_marks(configuration_from(xi, {0}), q.geometry, m, 4);
    const Trajectory big = run_marks(configuration_from(xi, {0, 3}), q.geometry, m, 4);
    for (double t : {0.5, 1.0, 2.0, 4.0}) EXPECT_TRUE(subset(replay(small, t), replay(big, t)));
  }
}

TEST(Icp, MonotoneInLambdaUnderSharedMarks) {
  const IcpParams base = params1(64, 0, 4, 0.5);
  for (Engine e : {Engine::FrozenMarks, Engine::Streamed}) {
    for (std::uint64_t s = 0; s < 30; ++s) {
      RunOptions o;
      o.lambda_max = 3;
      Trajectory prev;
      for (double lambda : {0.5, 1.0, 2.0, 3.0}) {
        IcpParams q = base;
        q.lambda = lambda;
        Trajectory tr = run(sample_initial(q, s), q, 4, e, s, o);
        if (lambda > 0.5) {
          for (double t : {0.5, 1.0, 2.0, 4.0}) EXPECT_TRUE(subset(replay(prev, t), replay(tr, t)));
          EXPECT_TRUE(!prev.wrapped || tr.wrapped);
        }
        prev = std::move(tr);
      }
    }
  }
}

TEST(Icp, EnginesAgreeInLaw) {
  const IcpParams q = params1(32, 1, 2, 0.5);
  auto hist = [&](Engine e) {
    std::vector<double> h(33, 0);
    for (int i = 0; i < 3000; ++i) {
      RunOptions o;
      o.log = LogLevel::None;
      h[run(sample_initial(q, 50000 + i), q, 2, e, 50000 + i, o).final_state.infected_count()] += 1;
    }
    return h;
  };
  const auto frozen = hist(Engine::FrozenMarks);
  EXPECT_GT(chi_square_two_sample(frozen, hist(Engine::Dynamic)).p_value, 0.001);
  EXPECT_GT(chi_square_two_sample(frozen, hist(Engine::Streamed)).p_value, 0.001);
}

TEST(Icp, LoggedAndUnloggedStreamedAgreeInLaw) {
  const IcpParams q = params1(32, 1.5, 4, 0.5);
  std::vector<double> a(33, 0), b(33, 0);
  for (int i = 0; i < 3000; ++i) {
    RunOptions o;
    a[run(sample_initial(q, i), q, 2, Engine::Streamed, i, o).final_state.infected_count()] += 1;
    o.log = LogLevel::None;
    b[run(sample_initial(q, i), q, 2, Engine::Streamed, 70000 + i, o).final_state.infected_count()] += 1;
  }
  EXPECT_GT(chi_square_two_sample(a, b).p_value, 0.001);
}

TEST(Icp, StoppingAtExtinctionKeepsTheOutcome) {
  const IcpParams q = params1(64, 1.2, 3, 0.5);
  for (Engine e : {Engine::FrozenMarks, Engine::Dynamic, Engine::Streamed}) {
    for (std::uint64_t s = 0; s < 40; ++s) {
      RunOptions o;
      o.log = LogLevel::None;
      const Trajectory full = run(sample_initial(q, s), q, 5, e, s, o);
      o.stop_when_extinct = true;
      const Trajectory cut = run(sample_initial(q, s), q, 5, e, s, o);
      EXPECT_EQ(full.extinct, cut.extinct);
      EXPECT_LE(cut.end_time, 5.0);
    }
  }
}

TEST(Icp, RejectsBadInput) {
  const IcpParams q = params1(16, 1, 1, 0.5);
  EXPECT_THROW(run(sample_initial(q, 1), q, 0, Engine::Dynamic, 1), DomainError);
  EXPECT_THROW(run(sample_initial(q, 1), q, -1, Engine::Dynamic, 1), DomainError);
  IcpParams bad = q;
  bad.p = 1.5;
  EXPECT_THROW(sample_initial(bad, 1), DomainError);
  EXPECT_THROW(engine_from_string("quantum"), DomainError);
}

TEST(Containment, TrivialCases) {
  Geometry g(1, 32, Boundary::Torus);
  const MarkSet empty(2.0, 0, {});
  EXPECT_EQ(containment(g, empty, {3, 7}, 0, 2), (std::vector<SiteIndex>{3, 7}));
  SampleOptions o;
  o.recoveries = false;
  const MarkSet stir = sample_marks(g, {2, 0}, 2, 5, o);
  EXPECT_EQ(containment(g, stir, {0, 1, 2}, 0, 2).size(), 3u);
}

TEST(Containment, DominatesInfectionsAndKappa) {
  const IcpParams q = params1(64, 1, 4, 0.5);
  std::uint64_t violations = 0, checks = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const MarkSet m = sample_marks(q.geometry, {q.v, q.lambda}, 3, s);
    Configuration z = sample_initial(q, s);
    ContainmentFlow psi(q.geometry, {0});
    KappaField kap(q.geometry);
    std::size_t prev_size = psi.size();
    for (const Mark& mk : m.marks()) {
      apply_mark(z, mk);
      psi.apply(mk);
      kap.apply(mk);
      EXPECT_GE(psi.size(), prev_size);
      prev_size = psi.size();
      for (SiteIndex x = 0; x < 64; ++x) {
        ++checks;
        if (z.states[x] == State::Infected && !psi.contains(x)) ++violations;
        if (psi.contains(x) && kap.at(x) < 1) ++violations;
      }
    }
  }
  EXPECT_GT(checks, 0u);
  EXPECT_EQ(violations, 0u);
}

TEST(Kappa, MassAccounting) {
  Geometry g(1, 16, Boundary::Torus);
  SampleOptions o;
  o.recoveries = o.transmissions = false;
  const auto k = kappa(g, sample_marks(g, {3, 0}, 2, 1, o), 2);
  EXPECT_EQ(std::accumulate(k.begin(), k.end(), std::uint64_t{0}), 1u);
  const MarkSet one(1.0, 0, {Mark{0.5, 0, MarkKind::Transmission, 0, 1}});
  const auto k2 = kappa(g, one, 1);
  EXPECT_EQ(std::accumulate(k2.begin(), k2.end(), std::uint64_t{0}), 2u);
}

TEST(Collisions, Basics) {
  Geometry g(1, 64, Boundary::Torus);
  SampleOptions o;
  o.recoveries = false;
  const MarkSet stir = sample_marks(g, {2, 0}, 3, 2, o);
  const CollisionStats cs = collision_stats(g, stir, {0}, 3);
  EXPECT_TRUE(std::isinf(cs.first_collision));
  EXPECT_EQ(cs.contained, 1u);
  EXPECT_EQ(cs.pair_time, 0.0);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const MarkSet m = sample_marks(g, {4, 1}, 3, s);
    double prev = 0;
    for (double h : {0.5, 1.0, 2.0, 3.0}) {
      const CollisionStats c = collision_stats(g, m, {0}, h);
      EXPECT_GE(c.pair_time, prev);
      prev = c.pair_time;
      if (c.first_collision > h) {
        ContainmentFlow psi(g, {0});
        for (std::size_t i = 0; i < m.upper(h); ++i) {
          const Mark& mk = m.marks()[i];
          if (mk.kind == MarkKind::Transmission) EXPECT_FALSE(psi.contains(mk.a) && psi.contains(mk.b));
          psi.apply(mk);
        }
      }
    }
  }
}

TEST(HalfCrossing, TrivialCases) {
  Geometry g(1, 32, Boundary::Torus);
  Trajectory empty;
  empty.initial = configuration_from(Occupancy(32, 1), {});
  empty.final_state = empty.initial;
  empty.horizon = 4;
  EXPECT_EQ(half_crossing(g, empty, {0, 3, 0, 2}).kind, CrossingKind::None);
  Trajectory still = empty;
  still.initial = configuration_from(Occupancy(32, 1), {0});
  EXPECT_EQ(half_crossing(g, still, {0, 3, 0, 2}).kind, CrossingKind::Temporal);
  EXPECT_THROW(half_crossing(g, still, {0, 3, 3, 2}), DomainError);
}

TEST(HalfCrossing, AgreesWithPathEnumeration) {
  Geometry g(1, 8, Boundary::Torus);
  Rng rng(99);
  int compared = 0, crossings = 0;
  std::map<int, int> kinds;
  for (std::uint64_t s = 0; compared < 1000; ++s) {
    IcpParams q;
    q.geometry = g;
    q.lambda = 0.5 + 2.5 * rng.uniform();
    q.v = 0.3 + 1.5 * rng.uniform();
    q.p = 0.5 + 0.5 * rng.uniform();
    q.initial_infected = {static_cast<SiteIndex>(rng.below(8))};
    const Trajectory tr = run(sample_initial(q, s), q, 1.5, Engine::Dynamic, s);
    if (tr.events.size() > 30) continue;
    const SpaceTimeBox box{static_cast<SiteIndex>(rng.below(8)), 2, 0.2 * rng.uniform(), 0.6 + 0.6 * rng.uniform()};
    const HalfCrossing a = half_crossing(g, tr, box);
    const HalfCrossing b = oracle::half_crossing_paths(g, tr, box);
    ASSERT_EQ(static_cast<int>(a.kind), static_cast<int>(b.kind)) << "seed " << s;
    ASSERT_EQ(a.side, b.side);
    ASSERT_EQ(a.outward, b.outward);
    ++compared;
    crossings += a.kind != CrossingKind::None;
    kinds[static_cast<int>(a.kind)]++;
  }
  EXPECT_GT(kinds[static_cast<int>(CrossingKind::Spatial)], 20);
  EXPECT_GT(kinds[static_cast<int>(CrossingKind::None)], 20);
  EXPECT_GT(kinds[static_cast<int>(CrossingKind::Temporal)], 20);
}

TEST(Xi, Flags) {
  Geometry g(1, 101, Boundary::Torus);
  XiThresholds th;
  th.p0 = 0.8;
  th.L0 = 40;
  th.box_radius = 2;
  const double v = 16;
  const Configuration empty = configuration_from(Occupancy(101, 0), {});
  const XiFlags f0 = xi_classify(g, empty, v, th);
  EXPECT_FALSE(f0.dens || f0.dist || f0.inf);
  Occupancy xi(101, 0);
  for (SiteIndex y : ball_indices(g, 0, 2)) xi[y] = 1;
  EXPECT_TRUE(xi_classify(g, configuration_from(xi, {}), v, th).dens);
  Occupancy one(101, 0);
  one[21] = 1;
  EXPECT_TRUE(xi_classify(g, configuration_from(one, {21}), v, th).dist);
  th.L0 = 60;
  EXPECT_THROW(xi_classify(g, empty, v, th), DomainError);
}

TEST(Sigma, LoneRecovery) {
  const IcpParams q = params1(32, 0, 1, 0.5);
  const Trajectory tr = run(sample_initial(q, 3), q, 50, Engine::Dynamic, 3);
  const auto chain = sigma_chain(tr);
  ASSERT_EQ(chain.size(), 1u);
  EXPECT_EQ(chain[0].increment, -1);
  EXPECT_EQ(chain[0].infected, 0u);
}

TEST(Sigma, IncrementsAndCounts) {
  const IcpParams q = params1(64, 1, 8, 0.5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Trajectory tr = run(sample_initial(q, s), q, 5, Engine::Dynamic, s);
    const auto chain = sigma_chain(tr);
    for (const auto& ep : chain) {
      EXPECT_GE(ep.increment, -1);
      EXPECT_LE(ep.increment, 1);
      EXPECT_EQ(replay(tr, ep.time).infected_count(), ep.infected);
    }
  }
}
