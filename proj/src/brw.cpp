#include "icpsim/brw.hpp"

#include <cmath>

#include "icpsim/errors.hpp"
#include "icpsim/parallel.hpp"
#include "icpsim/rng.hpp"

namespace icpsim {

std::size_t WalkerForest::alive_count() const {
  std::size_t c = 0;
  for (const Walker& w : walkers) c += std::isinf(w.death);
  return c;
}

std::vector<SiteIndex> WalkerForest::alive_positions() const {
  std::vector<SiteIndex> out;
  for (const Walker& w : walkers) {
    if (std::isinf(w.death)) out.push_back(w.position);
  }
  return out;
}

void continue_brw(const Geometry& g, WalkerForest& f, double t0, double beta, double v, double horizon,
                  std::uint64_t seed, std::size_t capacity) {
  require(beta >= 0 && v >= 0, "rates must be >= 0");
  require(horizon >= t0, "horizon before start");
  Rng rng(stream_key(seed, static_cast<std::uint64_t>(Domain::Brw)));
  std::vector<std::uint64_t> alive;
  for (const Walker& w : f.walkers) {
    if (std::isinf(w.death)) alive.push_back(w.id);
  }
  const std::size_t full_degree = 2 * static_cast<std::size_t>(g.dimension());
  const double per_walker = 1.0 + beta + v * static_cast<double>(full_degree);
  double t = t0;
  while (!alive.empty()) {
    t += rng.exponential(per_walker * static_cast<double>(alive.size()));
    if (t > horizon) break;
    const std::size_t slot = rng.below(alive.size());
    Walker& w = f.walkers[alive[slot]];
    const double u = rng.uniform() * per_walker;
    if (u < 1.0) {
      w.death = t;
      alive[slot] = alive.back();
      alive.pop_back();
    } else if (u < 1.0 + beta) {
      if (f.walkers.size() >= capacity) {
        throw CapacityError("walker population exceeds capacity " + std::to_string(capacity));
      }
      Walker child;
      child.id = f.walkers.size();
      child.parent = static_cast<std::int64_t>(w.id);
      child.position = w.position;
      child.birth = t;
      alive.push_back(child.id);
      f.walkers.push_back(child);
    } else {
      // Uniform among the 2d directions; a missing hard-wall neighbor is a no-op
      // so the per-neighbor rate stays v.
      const std::size_t dir = rng.below(full_degree);
      SiteIndex y;
      if (g.step(w.position, static_cast<int>(dir / 2), (dir & 1) ? 1 : -1, y)) w.position = y;
    }
  }
  f.horizon = horizon;
}

WalkerForest run_brw(const Geometry& g, const std::vector<SiteIndex>& initial, double beta, double v, double horizon,
                     std::uint64_t seed, std::size_t capacity) {
  WalkerForest f;
  for (SiteIndex x : initial) {
    require(x < g.site_count(), "walker outside geometry");
    Walker w;
    w.id = f.walkers.size();
    w.position = x;
    f.walkers.push_back(w);
  }
  continue_brw(g, f, 0.0, beta, v, horizon, seed, capacity);
  return f;
}

std::size_t occupancy(const Geometry& g, const WalkerForest& f, SiteIndex center, int r) {
  const auto mask = ball_mask(g, center, r);
  std::size_t c = 0;
  for (const Walker& w : f.walkers) {
    if (std::isinf(w.death) && mask[w.position]) ++c;
  }
  return c;
}

MeanField mean_field_params(int d, double p, double lambda) {
  require(d >= 1 && p >= 0 && p <= 1 && lambda >= 0, "invalid parameters");
  MeanField mf;
  mf.beta = 2.0 * d * p * lambda;
  if (mf.beta == 1.0) throw DomainError("beta = 1: alpha would be 0");
  mf.supercritical = mf.beta > 1.0;
  if (mf.supercritical) {
    mf.alpha = (mf.beta - 1.0) / (2.0 * mf.beta);
    mf.k = 2.0 / *mf.alpha;
  }
  return mf;
}

ExtinctionEstimate brw_extinction(double beta, std::uint64_t n0, double horizon, std::uint64_t replicas,
                                  std::uint64_t seed, std::uint64_t pop_cap, unsigned workers) {
  require(beta >= 0 && n0 >= 1 && replicas >= 1 && pop_cap > n0, "invalid extinction parameters");
  auto dead = run_replicas(replicas, workers, [&](std::uint64_t i) -> std::uint8_t {
    Rng rng(stream_key(seed, static_cast<std::uint64_t>(Domain::Brw), i));
    std::uint64_t n = n0;
    double t = 0;
    const double birth = beta / (1.0 + beta);
    while (n > 0 && n < pop_cap) {
      t += rng.exponential((1.0 + beta) * static_cast<double>(n));
      if (t > horizon) break;
      if (rng.uniform() < birth) {
        ++n;
      } else {
        --n;
      }
    }
    return n == 0 ? 1 : 0;
  });
  std::uint64_t c = 0;
  for (auto x : dead) c += x;
  ExtinctionEstimate out;
  out.extinct = wilson(c, replicas);
  out.extinct.seed = seed;
  out.cap_bias_bound = beta > 1 ? std::pow(1.0 / beta, static_cast<double>(pop_cap)) : 0.0;
  return out;
}

H0Calibration calibrate_h0(const Geometry& g, double beta, double v, double k, double alpha,
                           const std::vector<double>& grid, std::uint64_t replicas, std::uint64_t seed,
                           unsigned workers) {
  const double sv = std::sqrt(v);
  const int inner = static_cast<int>(std::floor(sv / 2));
  const int outer = static_cast<int>(std::floor(8 * sv));
  const auto centers = ball_indices(g, g.origin(), outer);
  ball_indices(g, g.origin(), outer + inner);  // geometry must hold every box
  H0Calibration cal;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const double h = grid[gi];
    auto hits = run_replicas(replicas, workers, [&](std::uint64_t i) -> std::uint8_t {
      WalkerForest f = run_brw(g, {g.origin()}, beta, v, h, stream_key(seed, gi, i));
      std::vector<std::size_t> count(g.site_count(), 0);
      for (SiteIndex x : f.alive_positions()) ++count[x];
      for (SiteIndex c : centers) {
        std::size_t inside = 0;
        for (SiteIndex y : ball_indices(g, c, inner)) inside += count[y];
        if (static_cast<double>(inside) < k) return 0;
      }
      return 1;
    });
    std::uint64_t c = 0;
    for (auto x : hits) c += x;
    Estimate e = wilson(c, replicas);
    e.seed = seed;
    cal.sweep.push_back({h, e});
    if (e.mean > alpha) {
      cal.h0 = h;
      break;
    }
  }
  return cal;
}

}  // namespace icpsim
