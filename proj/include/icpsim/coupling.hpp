#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "icpsim/brw.hpp"
#include "icpsim/icp.hpp"
#include "icpsim/interchange.hpp"
#include "icpsim/lattice.hpp"

namespace icpsim {

// Centers of the radius-ell boxes covering B_0(L - 2 ell). The first box is
// anchored at -(L - 2 ell) on every axis; the last one may overshoot by up to
// 2 ell but stays inside B_0(L).
std::vector<SiteIndex> pairing_cover(const Geometry& g, int ell, int L);

struct Pairing {
  std::vector<std::pair<SiteIndex, SiteIndex>> pairs;  // (xi site, xi' site)
  std::vector<SiteIndex> cover;
};

// Pairs xi particles with xi' particles box by box when every cover box holds
// no more xi than xi' particles; nullopt otherwise. Co-located particles are
// paired first, the rest in site-index order.
std::optional<Pairing> good_pairing(const Geometry& g, const Occupancy& xi, const Occupancy& xi2, int ell, int L);

enum class FailureCause { A1, A2, A3 };

const char* to_string(FailureCause c);

struct CouplingParams {
  int ell = 4;
  int L = 64;
  double t = 320;
  double T = 640;
  double speed = 1;
};

struct CouplingOutcome {
  bool success = false;
  std::optional<FailureCause> cause;  // chronologically first
  double a1_time = std::numeric_limits<double>::infinity();
  double a2_time = std::numeric_limits<double>::infinity();
  double a3_time = std::numeric_limits<double>::infinity();
  bool domination_holds = true;  // xi' >= xi on B_0(L/4) x [t,T]
  std::size_t matched_at_t = 0;
  Occupancy xi_at_t, xi_at_T, xi2_at_T;
};

// Two rate-`speed` mark families J1, J2. xi' follows J2; xi follows J2 on
// edges touching a matched xi particle and J1 elsewhere. Pairs refresh at
// epochs j*ell^2 <= t.
CouplingOutcome couple_interchange(const Geometry& g, const Occupancy& xi, const Occupancy& xi2,
                                   const CouplingParams& params, std::uint64_t seed);

struct InfectionRecord {
  std::int64_t parent = -1;  // infection index, -1 for the initial ones
  SiteIndex birth_site = 0;
  double birth = 0;
  double recovery = std::numeric_limits<double>::infinity();
  double s_measure = 0;      // Leb(S^(j))
  int max_d = 0;             // max over time of |D^(j)|
  int max_e = 0;             // max over time of |E^(j)|
  int max_gap = 0;           // max over time of |X^(j) - W^(j)| (torus)
};

struct CoupleBrwOptions {
  double psi_cap = std::numeric_limits<double>::infinity();  // M in the hypotheses
  std::uint64_t capacity = 20'000'000;
};

struct PairedRun {
  std::vector<InfectionRecord> infections;
  double collision_time = std::numeric_limits<double>::infinity();  // T^A
  bool bijection_holds = true;  // walkers == infected at every event before T^A
  std::uint64_t checked_events = 0;
  std::uint64_t attempts = 0;  // transmissions from infected sites before T^A
  std::uint64_t births = 0;    // of which landed on a healthy particle
  std::size_t contained_at_end = 0;
  bool hypotheses_hold = false;
  bool bound_holds = true;
  std::size_t walkers_at_h0 = 0;
  std::size_t infected_at_h0 = 0;
};

// Infections carry indices j (initial ones first); walker W^(j) copies the
// jumps of its particle X^(j) outside S^(j) and those of an independent rate-v
// walk inside it. After T^A the walkers continue as an independent BRW with
// beta = 2 d p lambda.
PairedRun couple_icp_brw(const IcpParams& params, double h0, std::uint64_t seed, const CoupleBrwOptions& opts = {});

}  // namespace icpsim
