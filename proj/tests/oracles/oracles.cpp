#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace oracle {

using namespace icpsim;
using i128 = __int128;

double poisson_pmf(double mu, std::uint64_t k) {
  if (mu == 0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log(mu) - mu - std::lgamma(static_cast<double>(k) + 1));
}

double meet_d1(int ell) {
  // States 0..K for |X - X'|; 0 absorbing. Jumps +-1 at rate 2 each; from 1
  // the step -1 reaches 0. K is far enough that truncation is negligible.
  const int start = 2 * ell;
  const int K = start + 40 + 12 * ell;
  const double rate = 4.0;
  const double t = static_cast<double>(ell) * ell;
  const double mu = rate * t;
  std::vector<double> p(K + 1, 0.0), q(K + 1);
  p[start] = 1;
  double absorbed = 0;
  double weight_sum = 0;
  const auto kmax = static_cast<std::uint64_t>(mu + 12 * std::sqrt(mu) + 30);
  for (std::uint64_t k = 0; k <= kmax; ++k) {
    const double w = poisson_pmf(mu, k);
    absorbed += w * p[0];
    weight_sum += w;
    std::fill(q.begin(), q.end(), 0.0);
    q[0] = p[0];
    for (int s = 1; s <= K; ++s) {
      q[s - 1] += 0.5 * p[s];
      q[std::min(s + 1, K)] += 0.5 * p[s];
    }
    p.swap(q);
  }
  // Mass beyond kmax counts with its current absorption probability.
  return absorbed + (1 - weight_sum) * p[0];
}

namespace {

i128 ipow(i128 b, int e) {
  i128 r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// rho_N * 2^N as an integer: sum over i <= N of 2^(N-i).
i128 rho_scaled(int N) {
  i128 s = 0;
  for (int i = 0; i <= N; ++i) s += ipow(2, N - i);
  return s;
}

}  // namespace

IndexRange index_range(const SurvScaleTable& tbl, int N, std::int64_t m, std::int64_t n) {
  const i128 a = tbl.alpha;
  const i128 A1 = ipow(a, (N - 1) * (N - 1));
  const i128 A = ipow(a, N * N);
  const i128 P = ipow(2, N);
  const i128 R = rho_scaled(N);
  const i128 R1 = 2 * rho_scaled(N - 1);  // rho_{N-1} * 2^N
  // Everything multiplied by 2^N and measured in units of the scale-0 length.
  auto left_ok = [&](i128 i) { return i * A1 * P - R1 * A1 >= i128(m) * A * P - R * A; };
  auto right_ok = [&](i128 i) { return i * A1 * P + R1 * A1 <= i128(m) * A * P + R * A; };
  const i128 span = ipow(a, 2 * N - 1) * 4 + 8;
  const i128 c = i128(m) * ipow(a, 2 * N - 1);
  IndexRange out{};
  for (i128 i = c - span; i <= c + span; ++i) {
    if (left_ok(i)) {
      out.l = static_cast<std::int64_t>(i);
      break;
    }
  }
  for (i128 i = c + span; i >= c - span; --i) {
    if (right_ok(i)) {
      out.r = static_cast<std::int64_t>(i);
      break;
    }
  }
  const auto h1 = static_cast<i128>(std::llround(static_cast<double>(tbl.rows[N - 1].h)));
  const auto h = static_cast<i128>(std::llround(static_cast<double>(tbl.rows[N].h)));
  const i128 guess = i128(n) * h / h1;
  for (i128 j = guess - 4; j <= guess + 4; ++j) {
    if (j * h1 >= i128(n) * h) {
      out.b = static_cast<std::int64_t>(j);
      break;
    }
  }
  for (i128 j = guess + h / h1 + 4; j >= guess - 4; --j) {
    if ((j + 1) * h1 <= (i128(n) + 1) * h) {
      out.t = static_cast<std::int64_t>(j);
      break;
    }
  }
  return out;
}

bool bad_by_pairs(const GridField& bad, const SurvScaleTable& tbl, int N, std::int64_t m, std::int64_t n) {
  const IndexRange ir = index_range(tbl, N, m, n);
  std::vector<std::pair<std::int64_t, std::int64_t>> pts;
  for (std::int64_t j = ir.b; j <= ir.t; ++j) {
    for (std::int64_t i = ir.l; i <= ir.r; ++i) {
      if (bad.at(i, j)) pts.emplace_back(i, j);
    }
  }
  const double root = std::sqrt(static_cast<double>(tbl.alpha));
  for (std::size_t x = 0; x < pts.size(); ++x) {
    for (std::size_t y = x + 1; y < pts.size(); ++y) {
      const auto dj = std::llabs(pts[x].second - pts[y].second);
      const auto di = std::llabs(pts[x].first - pts[y].first);
      if (dj > 1 || static_cast<double>(di) > root) return true;
    }
  }
  return false;
}

namespace {

std::optional<bool> acc0(const GridField& bad0, std::int64_t m, std::int64_t n,
                         std::map<std::pair<std::int64_t, std::int64_t>, std::optional<bool>>& memo) {
  if (n < 0) return std::nullopt;
  // The answer is determined only if every point a path could visit is known.
  for (std::int64_t k = 0; k <= n; ++k) {
    for (std::int64_t i = -k; i <= k; ++i) {
      if (std::llabs(m - i) > n - k) continue;
      if (!bad0.is_defined(i, k)) return std::nullopt;
    }
  }
  auto key = std::pair{m, n};
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  // Forward search from (0,0) along good points.
  std::vector<std::int64_t> row;
  if (!bad0.at(0, 0)) row.push_back(0);
  for (std::int64_t k = 1; k <= n && !row.empty(); ++k) {
    std::vector<std::int64_t> next;
    for (std::int64_t i : row) {
      for (std::int64_t di = -1; di <= 1; ++di) {
        const std::int64_t j = i + di;
        if (bad0.is_defined(j, k) && !bad0.at(j, k) &&
            std::find(next.begin(), next.end(), j) == next.end()) {
          next.push_back(j);
        }
      }
    }
    row = std::move(next);
  }
  const bool ok = std::find(row.begin(), row.end(), m) != row.end();
  memo[key] = ok;
  return ok;
}

std::optional<bool> accN(const GridField& bad0, const SurvScaleTable& tbl, int N, std::int64_t m, std::int64_t n,
                         std::map<std::pair<std::int64_t, std::int64_t>, std::optional<bool>>& memo0) {
  if (N == 0) return acc0(bad0, m, n, memo0);
  if (n < 0) return std::nullopt;
  const IndexRange ir = index_range(tbl, N, m, n);
  std::int64_t misses = 0;
  for (std::int64_t i = ir.l; i <= ir.r; ++i) {
    const auto sub = accN(bad0, tbl, N - 1, i, ir.t, memo0);
    if (!sub) return std::nullopt;
    misses += !*sub;
  }
  return static_cast<double>(misses) <= std::sqrt(static_cast<double>(tbl.alpha));
}

}  // namespace

std::optional<bool> accessible_rec(const GridField& bad0, const SurvScaleTable& tbl, int N, std::int64_t m,
                                   std::int64_t n) {
  std::map<std::pair<std::int64_t, std::int64_t>, std::optional<bool>> memo;
  return accN(bad0, tbl, N, m, n, memo);
}

namespace {

struct Search {
  const Trajectory* traj;
  std::size_t first, last;  // events strictly after t0 and up to t1
  std::function<bool(SiteIndex)> allowed, goal;

  // Follows one path from site x just after event k-1.
  bool walk(SiteIndex x, std::size_t k) const {
    if (goal(x)) return true;
    for (; k < last; ++k) {
      const Event& ev = traj->events[k];
      if (ev.kind == EventKind::Swap && (ev.a == x || ev.b == x)) {
        x = ev.a == x ? ev.b : ev.a;
        if (!allowed(x)) return false;
        if (goal(x)) return true;
      } else if (ev.kind == EventKind::Recovery && ev.a == x) {
        return false;
      } else if (ev.kind == EventKind::Transmission && ev.a == x && allowed(ev.b) &&
                 (ev.outcome == Outcome::OntoHealthy || ev.outcome == Outcome::OntoInfected)) {
        if (walk(ev.b, k + 1)) return true;
      }
    }
    return temporal_end;
  }
  bool temporal_end = false;
};

}  // namespace

HalfCrossing half_crossing_paths(const Geometry& g, const Trajectory& traj, const SpaceTimeBox& box) {
  const auto inside = ball_mask(g, box.center, box.ell);
  const int d = g.dimension();
  auto rel = [&](SiteIndex y, int axis) { return g.axis_delta(g.coord(box.center, axis), g.coord(y, axis)); };
  auto window = [&](double t1) {
    std::size_t a = 0, b = 0;
    while (a < traj.events.size() && traj.events[a].time <= box.t0) ++a;
    b = a;
    while (b < traj.events.size() && traj.events[b].time <= t1) ++b;
    return std::pair{a, b};
  };

  HalfCrossing hc;
  {
    auto [a, b] = window(box.t0 + box.h / 2);
    Search s{&traj, a, b, [&](SiteIndex y) { return inside[y] != 0; }, [](SiteIndex) { return false; }};
    s.temporal_end = true;
    const Configuration z = replay(traj, box.t0);
    for (SiteIndex y = 0; y < g.site_count(); ++y) {
      if (z.states[y] == State::Infected && inside[y] && s.walk(y, a)) {
        hc.kind = CrossingKind::Temporal;
        return hc;
      }
    }
  }
  auto [a, b] = window(box.t0 + box.h);
  for (int axis = 0; axis < d; ++axis) {
    for (int side : {+1, -1}) {
      for (bool outward : {true, false}) {
        auto slab = [&, axis, side](SiteIndex y) {
          if (!inside[y]) return false;
          const int r = side * rel(y, axis);
          return r >= 0 && r <= box.ell;
        };
        const int from = outward ? 0 : box.ell;
        const int to = outward ? box.ell : 0;
        auto face = [&, axis, side](SiteIndex y, int level) { return slab(y) && side * rel(y, axis) == level; };
        Search s{&traj, a, b, slab, [&, to](SiteIndex y) { return face(y, to); }};
        // A path may start at t0 or right after any event, on an infected
        // particle sitting on the start face.
        Configuration z = replay(traj, box.t0);
        bool found = false;
        for (std::size_t k = a; k <= b && !found; ++k) {
          if (k > a) {
            const Event& ev = traj.events[k - 1];
            z.states[ev.a] = ev.post_a;
            z.states[ev.b] = ev.post_b;
          }
          for (SiteIndex y = 0; y < g.site_count() && !found; ++y) {
            if (z.states[y] == State::Infected && face(y, from)) found = s.walk(y, k);
          }
        }
        if (found) {
          hc.kind = CrossingKind::Spatial;
          hc.axis = axis;
          hc.side = side;
          hc.outward = outward;
          return hc;
        }
      }
    }
  }
  return hc;
}

}  // namespace oracle
