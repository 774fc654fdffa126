#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "icpsim/lattice.hpp"
#include "icpsim/stats.hpp"

namespace icpsim {

struct Walker {
  std::uint64_t id = 0;
  std::int64_t parent = -1;
  SiteIndex position = 0;  // current, or at death
  double birth = 0;
  double death = std::numeric_limits<double>::infinity();
};

struct WalkerForest {
  std::vector<Walker> walkers;  // indexed by id
  double horizon = 0;

  std::size_t alive_count() const;
  std::vector<SiteIndex> alive_positions() const;
};

// Each walker dies at rate 1, splits in two at rate beta (the child starts on
// the parent's site) and jumps at rate v to each neighbor.
WalkerForest run_brw(const Geometry& g, const std::vector<SiteIndex>& initial, double beta, double v, double horizon,
                     std::uint64_t seed, std::size_t capacity = 1'000'000);

// Same dynamics continued from an existing forest's alive walkers, recording
// into `forest` (ids keep increasing).
void continue_brw(const Geometry& g, WalkerForest& forest, double t0, double beta, double v, double horizon,
                  std::uint64_t seed, std::size_t capacity = 1'000'000);

// Alive walkers in the closed ball of radius r around center.
std::size_t occupancy(const Geometry& g, const WalkerForest& f, SiteIndex center, int r);

struct MeanField {
  double beta = 0;
  std::optional<double> alpha;  // (beta - 1) / (2 beta), supercritical only
  std::optional<double> k;      // 2 / alpha
  bool supercritical = false;
};

// beta = 2 d p lambda. beta == 1 is rejected (alpha would vanish).
MeanField mean_field_params(int d, double p, double lambda);

struct ExtinctionEstimate {
  Estimate extinct;
  double cap_bias_bound = 0;  // (1/beta)^cap when runs are stopped at the cap
};

// Extinction by `horizon` from n0 ancestors. Motion does not affect the
// population size, so the size chain is simulated directly; a run whose
// population reaches pop_cap is counted as surviving.
ExtinctionEstimate brw_extinction(double beta, std::uint64_t n0, double horizon, std::uint64_t replicas,
                                  std::uint64_t seed, std::uint64_t pop_cap = 400, unsigned workers = 1);

struct H0Point {
  double h = 0;
  Estimate frequency;
};

struct H0Calibration {
  std::optional<double> h0;
  std::vector<H0Point> sweep;
};

// Sweeps h over `grid` until, from one walker at the origin, the frequency of
// "every radius sqrt(v)/2 box centered in B_0(8 sqrt v) holds >= k walkers at
// time h" exceeds alpha.
H0Calibration calibrate_h0(const Geometry& g, double beta, double v, double k, double alpha,
                           const std::vector<double>& grid, std::uint64_t replicas, std::uint64_t seed,
                           unsigned workers = 1);

}  // namespace icpsim
