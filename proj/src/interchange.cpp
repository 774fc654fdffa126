#include "icpsim/interchange.hpp"

#include <algorithm>
#include <cmath>

#include "icpsim/errors.hpp"
#include "icpsim/parallel.hpp"
#include "icpsim/rng.hpp"

namespace icpsim {

namespace {

void check_times(const MarkSet& m, double s, double t) {
  require(s >= 0 && t >= 0 && s <= m.window() && t <= m.window(), "flow times outside the mark window");
}

inline void swap_along(SiteIndex& pos, const Mark& mk) {
  if (pos == mk.a) {
    pos = mk.b;
  } else if (pos == mk.b) {
    pos = mk.a;
  }
}

}  // namespace

SiteIndex flow(const MarkSet& m, SiteIndex x, double s, double t) {
  check_times(m, s, t);
  const auto& marks = m.marks();
  SiteIndex pos = x;
  if (s <= t) {
    for (std::size_t i = m.upper(s), end = m.upper(t); i < end; ++i) {
      if (marks[i].kind == MarkKind::Jump) swap_along(pos, marks[i]);
    }
  } else {
    for (std::size_t i = m.upper(s), begin = m.upper(t); i > begin; --i) {
      if (marks[i - 1].kind == MarkKind::Jump) swap_along(pos, marks[i - 1]);
    }
  }
  return pos;
}

void advance(Occupancy& xi, const MarkSet& m, double s, double t) {
  check_times(m, s, t);
  require(s <= t, "advance needs s <= t");
  const auto& marks = m.marks();
  for (std::size_t i = m.upper(s), end = m.upper(t); i < end; ++i) {
    const Mark& mk = marks[i];
    if (mk.kind == MarkKind::Jump) std::swap(xi[mk.a], xi[mk.b]);
  }
}

Occupancy evolve(const Occupancy& xi0, const MarkSet& m, double t) {
  Occupancy xi = xi0;
  advance(xi, m, 0, t);
  return xi;
}

Occupancy bernoulli_occupancy(const Geometry& g, double p, std::uint64_t seed) {
  require(p >= 0 && p <= 1, "density must lie in [0,1]");
  Rng rng(stream_key(seed, static_cast<std::uint64_t>(Domain::Initial)));
  Occupancy xi(g.site_count());
  for (auto& s : xi) s = rng.bernoulli(p) ? 1 : 0;
  return xi;
}

namespace {

// One replica of the two-walker meeting experiment from displacement z.
bool walkers_meet(const std::vector<int>& z, int ell, Rng& rng) {
  const int d = static_cast<int>(z.size());
  std::vector<long> x(z.begin(), z.end());
  std::vector<long> y(d, 0);
  if (x == y) return true;
  const double horizon = static_cast<double>(ell) * ell;
  const double total = 4.0 * d;
  double t = 0;
  while (true) {
    t += rng.exponential(total);
    if (t > horizon) return false;
    const std::uint64_t k = rng.below(4 * static_cast<std::uint64_t>(d));
    auto& w = (k & 1) ? y : x;
    const auto axis = static_cast<int>((k >> 2) % d);
    w[axis] += (k & 2) ? 1 : -1;
    if (x == y) return true;
  }
}

}  // namespace

Estimate meet_probability(int d, int ell, std::uint64_t replicas, std::uint64_t seed, const MeetOptions& opts) {
  require(d >= 1, "dimension must be >= 1");
  require(ell >= 1, "ell must be >= 1");
  require(replicas >= 1, "replicas must be >= 1");

  std::vector<std::vector<int>> starts;
  if (!opts.exhaustive) {
    starts.push_back(std::vector<int>(d, 2 * ell));
  } else {
    // Displacements up to sign and coordinate permutation: sorted, nonnegative.
    std::vector<int> z(d, 0);
    while (true) {
      if (std::any_of(z.begin(), z.end(), [](int c) { return c != 0; })) starts.push_back(z);
      int k = d - 1;
      while (k >= 0 && z[k] == 2 * ell) --k;
      if (k < 0) break;
      ++z[k];
      for (int j = k + 1; j < d; ++j) z[j] = z[k];
    }
  }

  Estimate best;
  bool have = false;
  for (std::size_t si = 0; si < starts.size(); ++si) {
    const auto& z = starts[si];
    auto hits = run_replicas(replicas, opts.workers, [&](std::uint64_t i) -> std::uint8_t {
      Rng rng(stream_key(seed, static_cast<std::uint64_t>(Domain::Walk), si, i));
      return walkers_meet(z, ell, rng) ? 1 : 0;
    });
    std::uint64_t successes = 0;
    for (auto h : hits) successes += h;
    Estimate e = wilson(successes, replicas);
    e.seed = seed;
    if (!have || e.mean < best.mean) {
      best = e;
      have = true;
    }
  }
  return best;
}

bool discr_event(const Geometry& g, const MarkSet& m, int ell, int L, double t) {
  require(ell >= 0 && L > ell, "need 0 <= ell < L");
  require(t >= 0 && t <= m.window(), "time outside the mark window");
  const auto outer = ball_mask(g, g.origin(), L);
  std::vector<std::uint8_t> source(g.site_count(), 0), target(g.site_count(), 0);
  for (SiteIndex x : boundary_indices(g, g.origin(), L)) source[x] = 1;
  for (SiteIndex x : boundary_indices(g, g.origin(), ell)) target[x] = 1;
  std::vector<std::uint8_t> tainted = source;
  const auto& marks = m.marks();
  for (std::size_t i = 0, end = m.upper(t); i < end; ++i) {
    const Mark& mk = marks[i];
    if (mk.kind != MarkKind::Jump) continue;
    if (!outer[mk.a] && !outer[mk.b]) continue;
    std::swap(tainted[mk.a], tainted[mk.b]);
    tainted[mk.a] |= source[mk.a];
    tainted[mk.b] |= source[mk.b];
    if ((tainted[mk.a] && target[mk.a]) || (tainted[mk.b] && target[mk.b])) return true;
  }
  return false;
}

Estimate discr_ip(const Geometry& g, int ell, int L, double t, std::uint64_t replicas, std::uint64_t seed,
                  unsigned workers) {
  require(g.boundary() == Boundary::Torus, "discrepancy estimate runs on a torus");
  require(g.side() > 2 * L + 2, "torus side must exceed 2L+2 (need " + std::to_string(2 * L + 3) + ")");
  require(replicas >= 1, "replicas must be >= 1");
  SampleOptions opts;
  opts.recoveries = false;
  opts.transmissions = false;
  auto hits = run_replicas(replicas, workers, [&](std::uint64_t i) -> std::uint8_t {
    MarkSet m = sample_marks(g, {1.0, 0.0}, t, replica_seed(seed, i), opts);
    return discr_event(g, m, ell, L, t) ? 1 : 0;
  });
  std::uint64_t successes = 0;
  for (auto h : hits) successes += h;
  Estimate e = wilson(successes, replicas);
  e.seed = seed;
  return e;
}

double discr_ip_bound(int d, int ell, int L, double t) {
  const double gap = L - ell;
  return 16.0 * std::exp(1.0) * d * d * d * t * std::pow(2.0 * L + 1, d - 1) *
         std::exp(-gap * std::log1p(gap / (2 * t)));
}

bool density_deviation(const Geometry& g, const Occupancy& xi0, const MarkSet& m, const DeviationWindow& w) {
  require(w.ell >= 0 && w.ell <= w.L, "need 0 <= ell <= L");
  require(w.t >= 0 && w.t <= m.window(), "time outside the mark window");
  require(xi0.size() == g.site_count(), "occupancy does not match geometry");
  const auto centers = ball_indices(g, g.origin(), w.L - w.ell);
  const double box = std::pow(2.0 * w.ell + 1, g.dimension());
  const double threshold = w.p * box;
  auto violates = [&](int count) {
    return w.direction == Direction::Up ? count > threshold : count < threshold;
  };

  // Boxes containing each site of the outer ball.
  std::vector<std::vector<std::uint32_t>> boxes_of(g.site_count());
  std::vector<int> count(centers.size(), 0);
  for (std::uint32_t c = 0; c < centers.size(); ++c) {
    for (SiteIndex y : ball_indices(g, centers[c], w.ell)) {
      boxes_of[y].push_back(c);
      count[c] += xi0[y];
    }
  }
  long bad = 0;
  for (int c : count) bad += violates(c);
  if (bad > 0) return true;

  Occupancy xi = xi0;
  const auto& marks = m.marks();
  for (std::size_t i = 0, end = m.upper(w.t); i < end; ++i) {
    const Mark& mk = marks[i];
    if (mk.kind != MarkKind::Jump || xi[mk.a] == xi[mk.b]) continue;
    // The particle moves from `from` to `to`.
    const SiteIndex from = xi[mk.a] ? mk.a : mk.b;
    const SiteIndex to = xi[mk.a] ? mk.b : mk.a;
    std::swap(xi[mk.a], xi[mk.b]);
    for (auto c : boxes_of[from]) {
      bad -= violates(count[c]);
      --count[c];
      bad += violates(count[c]);
    }
    for (auto c : boxes_of[to]) {
      bad -= violates(count[c]);
      ++count[c];
      bad += violates(count[c]);
    }
    if (bad > 0) return true;
  }
  return false;
}

Estimate estimate_g(const Geometry& g, const Occupancy& xi0, const DeviationWindow& w, std::uint64_t replicas,
                    std::uint64_t seed, unsigned workers, double speed) {
  require(replicas >= 1, "replicas must be >= 1");
  require(speed > 0, "speed must be > 0");
  SampleOptions opts;
  opts.recoveries = false;
  opts.transmissions = false;
  auto hits = run_replicas(replicas, workers, [&](std::uint64_t i) -> std::uint8_t {
    MarkSet m = sample_marks(g, {speed, 0.0}, w.t, replica_seed(seed, i), opts);
    return density_deviation(g, xi0, m, w) ? 1 : 0;
  });
  std::uint64_t successes = 0;
  for (auto h : hits) successes += h;
  Estimate e = wilson(successes, replicas);
  e.seed = seed;
  return e;
}

double g_bound(int d, int ell, int L, double t, double p, double p_prime) {
  const double e = std::exp(1.0);
  return std::pow(2.0 * L + 1, d) * (e * std::pow(2.0 * ell + 2, d) * t + e) *
         std::exp(-2.0 * std::pow(2.0 * ell + 1, d) * (p_prime - p) * (p_prime - p));
}

Estimate time_together(const Geometry& g, double v, SiteIndex x, SiteIndex y, double t, std::uint64_t replicas,
                       std::uint64_t seed, unsigned workers) {
  require(x != y, "start sites must differ");
  SampleOptions opts;
  opts.recoveries = false;
  opts.transmissions = false;
  auto vals = run_replicas(replicas, workers, [&](std::uint64_t i) -> double {
    MarkSet m = sample_marks(g, {v, 0.0}, t, replica_seed(seed, i), opts);
    SiteIndex a = x, b = y;
    double last = 0, together = 0;
    for (const Mark& mk : m.marks()) {
      if (mk.kind != MarkKind::Jump) continue;
      if (mk.a != a && mk.b != a && mk.a != b && mk.b != b) continue;
      if (g.adjacent(a, b)) together += mk.time - last;
      last = mk.time;
      swap_along(a, mk);
      swap_along(b, mk);
    }
    if (g.adjacent(a, b)) together += t - last;
    return together;
  });
  Accumulator acc;
  for (double v2 : vals) acc.add(v2);
  return acc.estimate(seed);
}

}  // namespace icpsim
