#include "icpsim/mc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "icpsim/errors.hpp"
#include "icpsim/parallel.hpp"
#include "icpsim/rng.hpp"

namespace icpsim {

namespace {

Fate run_replica(const IcpParams& params, double horizon, std::uint64_t seed, std::uint64_t i, Engine engine,
                 std::optional<double> lambda_max) {
  const std::uint64_t rs = replica_seed(seed, i);
  const Configuration zeta0 = sample_initial(params, rs);
  RunOptions ro;
  ro.log = LogLevel::None;
  ro.lambda_max = lambda_max;
  ro.stop_when_extinct = true;
  const Trajectory tr = run(zeta0, params, horizon, engine, rs, ro);
  if (tr.wrapped) return Fate::Wrapped;
  return tr.extinct ? Fate::Died : Fate::Survived;
}

Estimate summarize(const std::vector<Fate>& fates, std::uint64_t seed) {
  std::uint64_t alive = 0, wrapped = 0;
  for (Fate f : fates) {
    alive += f == Fate::Survived;
    wrapped += f == Fate::Wrapped;
  }
  if (wrapped == fates.size()) throw DomainError("every replica reached the torus midline; geometry too small");
  Estimate e = wilson(alive, fates.size() - wrapped);
  e.replicas = fates.size();
  e.excluded = wrapped;
  e.seed = seed;
  return e;
}

void check_params(const IcpParams& params, double horizon) {
  require(params.v >= 0 && std::isfinite(params.v), "v must be >= 0");
  require(params.lambda >= 0 && std::isfinite(params.lambda), "lambda must be >= 0");
  require(params.p >= 0 && params.p <= 1, "p must lie in [0,1]");
  require(horizon > 0 && std::isfinite(horizon), "horizon must be > 0");
}

}  // namespace

std::vector<Fate> survival_fates(const IcpParams& params, double horizon, std::uint64_t replicas, std::uint64_t seed,
                                 const SurvivalOptions& opts) {
  check_params(params, horizon);
  return run_replicas(replicas, opts.workers, [&](std::uint64_t i) {
    return run_replica(params, horizon, seed, i, opts.engine, opts.lambda_max);
  });
}

Estimate estimate_survival(const IcpParams& params, double horizon, std::uint64_t replicas, std::uint64_t seed,
                           const SurvivalOptions& opts) {
  require(replicas >= 100, "need at least 100 replicas");
  return summarize(survival_fates(params, horizon, replicas, seed, opts), seed);
}

namespace {

// Per-replica bounds implied by earlier evaluations under shared marks.
struct FateCache {
  std::vector<double> dead_up_to;    // clean extinction for every lambda <= this
  std::vector<double> wrapped_from;  // wrap for every lambda >= this

  explicit FateCache(std::uint64_t n)
      : dead_up_to(n, -std::numeric_limits<double>::infinity()),
        wrapped_from(n, std::numeric_limits<double>::infinity()) {}
};

}  // namespace

ScanResult scan_lambda(const IcpParams& params, double lambda_lo, double lambda_hi, double theta_star, double horizon,
                       std::uint64_t replicas, std::uint64_t seed, const ScanOptions& opts) {
  require(lambda_lo >= 0 && lambda_lo < lambda_hi, "lambda range must be ordered");
  require(theta_star > 0 && theta_star < 1, "theta_star must lie in (0,1)");
  require(replicas >= 100, "need at least 100 replicas");
  require(opts.rel_tol > 0, "rel_tol must be > 0");
  check_params(params, horizon);

  ScanResult res;
  res.theta_star = theta_star;
  res.horizon = horizon;
  res.lambda_max = lambda_hi;
  res.geometry = params.geometry.describe();
  res.v = params.v;
  res.p = params.p;

  const bool reuse = opts.reuse_fates && opts.engine != Engine::Dynamic;
  FateCache cache(replicas);

  auto evaluate = [&](double lambda) {
    IcpParams q = params;
    q.lambda = lambda;
    std::vector<Fate> fates(replicas, Fate::Survived);
    std::vector<std::uint64_t> todo;
    for (std::uint64_t i = 0; i < replicas; ++i) {
      if (reuse && lambda <= cache.dead_up_to[i]) {
        fates[i] = Fate::Died;
      } else if (reuse && lambda >= cache.wrapped_from[i]) {
        fates[i] = Fate::Wrapped;
      } else {
        todo.push_back(i);
      }
    }
    const Engine engine = opts.engine;
    const auto ran = run_replicas(todo.size(), opts.workers, [&](std::uint64_t k) {
      return run_replica(q, horizon, seed, todo[k], engine, lambda_hi);
    });
    for (std::size_t k = 0; k < todo.size(); ++k) {
      const std::uint64_t i = todo[k];
      fates[i] = ran[k];
      if (ran[k] == Fate::Died) cache.dead_up_to[i] = std::max(cache.dead_up_to[i], lambda);
      if (ran[k] == Fate::Wrapped) cache.wrapped_from[i] = std::min(cache.wrapped_from[i], lambda);
    }
    ScanPoint pt;
    pt.lambda = lambda;
    pt.theta = summarize(fates, seed);
    pt.simulated = todo.size();
    res.trace.push_back(pt);
    return pt;
  };

  ScanPoint lo = evaluate(lambda_lo);
  ScanPoint hi = evaluate(lambda_hi);
  if (lo.theta.mean >= theta_star || hi.theta.mean < theta_star) {
    std::ostringstream os;
    os << "no crossing of " << theta_star << " in [" << lambda_lo << ", " << lambda_hi << "]: theta(" << lambda_lo
       << ") = " << lo.theta.mean << ", theta(" << lambda_hi << ") = " << hi.theta.mean;
    throw RangeError(os.str());
  }
  for (int step = 0; step < opts.max_steps && hi.lambda - lo.lambda > opts.rel_tol * hi.lambda; ++step) {
    const ScanPoint mid = evaluate(0.5 * (lo.lambda + hi.lambda));
    (mid.theta.mean >= theta_star ? hi : lo) = mid;
  }
  res.lambda_low = lo.lambda;
  res.lambda_high = hi.lambda;
  const double span = hi.theta.mean - lo.theta.mean;
  const double w = span > 0 ? (theta_star - lo.theta.mean) / span : 0.5;
  res.lambda_c = lo.lambda + w * (hi.lambda - lo.lambda);
  for (const ScanPoint& pt : res.trace) {
    if (pt.theta.ci_high < theta_star && (!res.ci_low || pt.lambda > *res.ci_low)) res.ci_low = pt.lambda;
    if (pt.theta.ci_low > theta_star && (!res.ci_high || pt.lambda < *res.ci_high)) res.ci_high = pt.lambda;
  }
  return res;
}

std::vector<TrendRow> trend_report(const IcpParams& base, const std::vector<double>& v_list, double theta_star,
                                   double horizon, std::uint64_t replicas, std::uint64_t seed,
                                   const std::vector<TrendRange>& ranges, const ScanOptions& opts) {
  require(!v_list.empty(), "v list is empty");
  for (std::size_t i = 1; i < v_list.size(); ++i) require(v_list[i] > v_list[i - 1], "v list must be increasing");
  const double scale = 2.0 * base.geometry.dimension() * base.p;
  require(scale > 0, "p must be > 0");
  std::vector<TrendRow> rows;
  for (std::size_t i = 0; i < v_list.size(); ++i) {
    IcpParams q = base;
    q.v = v_list[i];
    const TrendRange r = i < ranges.size() ? ranges[i] : TrendRange{};
    TrendRow row;
    row.v = q.v;
    row.scan = scan_lambda(q, r.lo, r.hi, theta_star, horizon, replicas, seed, opts);
    row.lambda_c = row.scan.lambda_c;
    row.normalized = row.lambda_c * scale;
    if (row.scan.ci_low) row.normalized_low = *row.scan.ci_low * scale;
    if (row.scan.ci_high) row.normalized_high = *row.scan.ci_high * scale;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace icpsim
