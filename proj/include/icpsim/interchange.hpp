#pragma once

#include <cstdint>
#include <vector>

#include "icpsim/lattice.hpp"
#include "icpsim/marks.hpp"
#include "icpsim/stats.hpp"

namespace icpsim {

// 0/1 occupation per site.
using Occupancy = std::vector<std::uint8_t>;

// Position at time t of the particle that sat at x at time s. For t < s the
// jump marks in (t, s] are replayed backwards, giving the inverse map.
SiteIndex flow(const MarkSet& m, SiteIndex x, double s, double t);

// xi_t(x) = xi_0(flow(x, t, 0)), computed by applying the swaps forward.
Occupancy evolve(const Occupancy& xi0, const MarkSet& m, double t);

// Applies the jump marks with time in (s, t] to xi in place.
void advance(Occupancy& xi, const MarkSet& m, double s, double t);

struct MeetOptions {
  bool exhaustive = false;  // minimize over all start pairs in the ball
  unsigned workers = 1;
};

// Two independent rate-1 walks on Z^d started at l-infinity distance 2*ell
// (opposite corners of the radius-ell ball); probability they coincide at some
// time in [0, ell^2].
Estimate meet_probability(int d, int ell, std::uint64_t replicas, std::uint64_t seed, const MeetOptions& opts = {});

// Whether some particle starting on the sphere of radius L at some time s is
// carried onto the sphere of radius ell at a later time s' <= t.
bool discr_event(const Geometry& g, const MarkSet& m, int ell, int L, double t);

// Monte Carlo over fresh rate-1 mark sets; needs a torus of side > 2L+2.
Estimate discr_ip(const Geometry& g, int ell, int L, double t, std::uint64_t replicas, std::uint64_t seed,
                  unsigned workers = 1);

// Closed-form upper bound on the discrepancy probability.
double discr_ip_bound(int d, int ell, int L, double t);

enum class Direction { Up, Down };

struct DeviationWindow {
  int ell = 1;
  int L = 1;
  double t = 0;
  double p = 0.5;
  Direction direction = Direction::Up;
};

// Some radius-ell box inside the radius-L ball has, at some time in [0,t],
// more (Up) or fewer (Down) than p * |box| particles.
bool density_deviation(const Geometry& g, const Occupancy& xi0, const MarkSet& m, const DeviationWindow& w);

// Probability of density_deviation under a fresh interchange at rate `speed`.
Estimate estimate_g(const Geometry& g, const Occupancy& xi0, const DeviationWindow& w, std::uint64_t replicas,
                    std::uint64_t seed, unsigned workers = 1, double speed = 1);

// Upper bound on the stationary average of the Up deviation at threshold p'
// when the initial law is Bernoulli(p), p < p'.
double g_bound(int d, int ell, int L, double t, double p, double p_prime);

// Mean time in [0,t] two particles started at x and y spend adjacent.
Estimate time_together(const Geometry& g, double v, SiteIndex x, SiteIndex y, double t, std::uint64_t replicas,
                       std::uint64_t seed, unsigned workers = 1);

// Product Bernoulli(p) occupancy.
Occupancy bernoulli_occupancy(const Geometry& g, double p, std::uint64_t seed);

}  // namespace icpsim
