#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icpsim/icp.hpp"
#include "icpsim/stats.hpp"

namespace icpsim {

struct SurvivalOptions {
  Engine engine = Engine::Streamed;
  unsigned workers = 1;
  // Transmission marks are drawn at this rate and thinned; defaults to lambda.
  std::optional<double> lambda_max;
};

// Per-replica outcome at one lambda.
enum class Fate : std::uint8_t { Died, Survived, Wrapped };

// Fraction of replicas with an infection alive at the horizon. Replica i uses
// replica_seed(seed, i) for both its initial configuration and its marks, so
// two calls that differ only in lambda share everything else. Replicas whose
// infection reached the torus midline are excluded.
Estimate estimate_survival(const IcpParams& params, double horizon, std::uint64_t replicas, std::uint64_t seed,
                           const SurvivalOptions& opts = {});

std::vector<Fate> survival_fates(const IcpParams& params, double horizon, std::uint64_t replicas,
                                 std::uint64_t seed, const SurvivalOptions& opts = {});

struct ScanPoint {
  double lambda = 0;
  Estimate theta;
  std::uint64_t simulated = 0;  // replicas actually run (the rest were implied)
};

struct ScanOptions {
  Engine engine = Engine::Streamed;
  unsigned workers = 1;
  double rel_tol = 0.01;
  int max_steps = 40;
  // Reuse per-replica fates across lambda: a clean extinction at lambda_a
  // implies one at every lower lambda, a wrap at lambda_b implies one at every
  // higher lambda. Gives the same numbers as running every replica.
  bool reuse_fates = true;
};

struct ScanResult {
  std::vector<ScanPoint> trace;  // evaluation order
  double lambda_c = 0;           // interpolated crossing of theta_star
  double lambda_low = 0;         // final bisection bracket
  double lambda_high = 0;
  // Largest lambda whose CI lies below theta_star and smallest whose CI lies
  // above it, among the evaluated points.
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  double theta_star = 0;
  double horizon = 0;
  double lambda_max = 0;
  std::string geometry;
  double v = 0;
  double p = 0;
};

// Bisection for the lambda at which the survival estimate crosses theta_star.
// params.lambda is ignored.
ScanResult scan_lambda(const IcpParams& params, double lambda_lo, double lambda_hi, double theta_star, double horizon,
                       std::uint64_t replicas, std::uint64_t seed, const ScanOptions& opts = {});

struct TrendRow {
  double v = 0;
  double lambda_c = 0;
  double normalized = 0;  // lambda_c * 2 d p
  std::optional<double> normalized_low;
  std::optional<double> normalized_high;
  ScanResult scan;
};

struct TrendRange {
  double lo = 0.2;
  double hi = 8;
};

// One scan per v, each with its own lambda range (the default range when
// ranges is shorter than v_list).
std::vector<TrendRow> trend_report(const IcpParams& base, const std::vector<double>& v_list, double theta_star,
                                   double horizon, std::uint64_t replicas, std::uint64_t seed,
                                   const std::vector<TrendRange>& ranges = {}, const ScanOptions& opts = {});

}  // namespace icpsim
