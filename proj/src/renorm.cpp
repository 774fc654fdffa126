#include "icpsim/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "icpsim/errors.hpp"
#include "icpsim/interchange.hpp"
#include "json.hpp"

namespace icpsim {

namespace {

using i128 = __int128;

i128 ipow(i128 base, std::int64_t e) {
  i128 r = 1;
  for (std::int64_t k = 0; k < e; ++k) {
    r *= base;
    if (r > (i128(1) << 100)) throw DomainError("scale arithmetic overflows");
  }
  return r;
}

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

i128 ceil_div(i128 a, i128 b) { return -floor_div(-a, b); }

std::int64_t floor_power(double v, double e) {
  const long double x = std::exp(static_cast<long double>(e) * std::log(static_cast<long double>(v)));
  auto k = static_cast<std::int64_t>(std::floor(x));
  if (static_cast<long double>(k + 1) - x < 1e-12L * x) ++k;
  return k;
}

}  // namespace

SurvScaleTable surv_scales(double v, double eps0, double h0, int n_max, std::optional<std::int64_t> alpha) {
  require(v > 1 && std::isfinite(v), "v must be > 1");
  require(eps0 > 0 && eps0 < 1.0 / 16, "eps0 must lie in (0,1/16)");
  require(h0 > 0, "h0 must be > 0");
  require(n_max >= 1, "N must be >= 1");
  SurvScaleTable t;
  t.v = v;
  t.eps0 = eps0;
  t.h0 = h0;
  t.alpha = alpha.value_or(floor_power(v, eps0 / 64));
  require(t.alpha >= 1, "alpha must be >= 1");
  t.degenerate = t.alpha < 2;
  t.length0 = floor_power(v, 0.5);
  const long double a = static_cast<long double>(t.alpha);
  const long double lv = std::log(static_cast<long double>(v));

  // Products of the integer ratios h_i / h_{i-1}, i < N.
  i128 ratio_product = 1;
  for (int N = 0; N <= n_max; ++N) {
    SurvScaleRow row;
    row.N = N;
    row.rho = 2.0 - std::ldexp(1.0, -N);
    const long double aN2 = std::pow(a, static_cast<long double>(N) * N);
    row.length = aN2 * static_cast<long double>(t.length0);
    row.side = N == 0 ? 2.0L * std::sqrt(static_cast<long double>(v)) * lv * lv : row.rho * row.length;
    row.h_prime = row.rho * aN2 * h0;
    row.delta = std::pow(a, -8.0L * (N + 2));
    if (N == 0) {
      row.h = h0;
      row.h_ratio = 1;
    } else {
      // h'_N / h_{N-1} = (2^(N+1) - 1) alpha^(N^2) / (2^N prod_{i<N} k_i).
      const i128 num = (ipow(2, N + 1) - 1) * ipow(t.alpha, static_cast<std::int64_t>(N) * N);
      const i128 den = ipow(2, N) * ratio_product;
      const i128 k = floor_div(num, den);
      row.h_ratio = static_cast<std::int64_t>(k);
      row.h = static_cast<long double>(k) * t.rows.back().h;
      // k >= (1 - alpha^(1-2N)) num/den  <=>  k den alpha^(2N-1) >= (alpha^(2N-1) - 1) num
      const i128 a2 = ipow(t.alpha, 2 * N - 1);
      row.sandwich = k * den * a2 >= (a2 - 1) * num && k * den <= num;
      ratio_product *= k;
      if (ratio_product == 0) throw DomainError("h ratio vanished; alpha too small for this N");
    }
    t.rows.push_back(row);
  }
  return t;
}

ExtScaleTable ext_scales(double v, int d, int n_max) {
  require(v > 1, "v must be > 1");
  require(d >= 1 && n_max >= 0, "need d >= 1 and N >= 0");
  ExtScaleTable t;
  t.v = v;
  t.d = d;
  const long double lv = std::log(static_cast<long double>(v));
  const long double base = std::pow(255.0L, 2.0L * d) * (4.0L * d + 2);
  for (int N = 0; N <= n_max; ++N) {
    ExtScaleRow r;
    r.N = N;
    const long double s = std::pow(128.0L, static_cast<long double>(N));
    r.length = s * std::sqrt(static_cast<long double>(v)) * lv * lv * lv * lv;
    r.time = s * 2.0L * lv * lv * lv;
    r.delta = std::pow(base, -static_cast<long double>(N + 1));
    t.rows.push_back(r);
  }
  return t;
}

IndexRange index_ranges(const SurvScaleTable& tbl, int N, std::int64_t m, std::int64_t n) {
  require(N >= 1 && N < static_cast<int>(tbl.rows.size()), "scale N outside the table");
  const i128 a = ipow(tbl.alpha, 2 * N - 1);
  const i128 p = ipow(2, N);
  // rho_N = (2p - 1)/p, rho_{N-1} = (2p - 2)/p.
  IndexRange out;
  out.l = static_cast<std::int64_t>(ceil_div(a * (i128(m) * p - 2 * p + 1) + 2 * p - 2, p));
  out.r = static_cast<std::int64_t>(floor_div(a * (i128(m) * p + 2 * p - 1) - (2 * p - 2), p));
  const std::int64_t k = tbl.rows[N].h_ratio;
  out.b = k * n;
  out.t = k * (n + 1) - 1;
  return out;
}

GridField::GridField(std::int64_t m0, std::int64_t m1, std::int64_t n0, std::int64_t n1, std::uint8_t fill)
    : m_min(m0), m_max(m1), n_min(n0), n_max(n1) {
  require(m1 >= m0 && n1 >= n0, "empty grid");
  const auto size = static_cast<std::size_t>((m1 - m0 + 1) * (n1 - n0 + 1));
  value.assign(size, fill);
  defined.assign(size, 1);
}

const char* to_string(Tri t) {
  switch (t) {
    case Tri::Good: return "good";
    case Tri::Bad: return "bad";
    case Tri::Indeterminate: return "indeterminate";
  }
  return "?";
}

Bad0Result classify_bad0(const Bad0Context& ctx, std::int64_t m, std::uint64_t g_budget) {
  const Geometry& g = ctx.geometry;
  require(g.boundary() == Boundary::Torus, "classification runs on a torus");
  require(ctx.at_epoch.states.size() == g.site_count() && ctx.at_next_epoch.states.size() == g.site_count(),
          "configurations do not match geometry");
  const int d = g.dimension();
  const double v = ctx.v;
  const double lv = std::log(v);
  const auto length0 = floor_power(v, 0.5);
  DeviationWindow w;
  w.ell = std::max<int>(1, static_cast<int>(floor_power(v, 1.0 / (8.0 * d))));
  w.L = static_cast<int>(std::floor(std::sqrt(v) * lv * lv));
  w.t = std::pow(v, 1.0 - 2.0 * ctx.eps0);
  w.p = 0.5 * (ctx.p_low + ctx.p0);
  w.direction = Direction::Down;
  if (4 * w.L + 1 > g.side()) {
    throw DomainError("geometry side must be at least " + std::to_string(4 * w.L + 1));
  }
  std::vector<int> shift(d, 0);
  shift[0] = static_cast<int>(length0 * m);
  const SiteIndex center = g.translate(g.origin(), shift);

  // Occupancy restricted to B_center(2L), moved so that center is the origin.
  const auto keep = ball_mask(g, center, 2 * w.L);
  Occupancy xi(g.site_count(), 0);
  for (SiteIndex y = 0; y < g.site_count(); ++y) {
    if (keep[y] && ctx.at_epoch.states[y] != State::Empty) {
      std::vector<int> back(d);
      for (int k = 0; k < d; ++k) back[k] = -shift[k];
      xi[g.translate(y, back)] = 1;
    }
  }
  Bad0Result res;
  res.threshold = std::exp(-0.5 * std::pow(v, ctx.eps0));
  res.g = estimate_g(g, xi, w, g_budget, ctx.seed, ctx.workers);
  if (res.g.ci_low >= res.threshold) {
    res.b1 = Tri::Bad;
  } else if (res.g.ci_high < res.threshold) {
    res.b1 = Tri::Good;
  } else {
    res.b1 = Tri::Indeterminate;
  }

  const double floor_count = std::pow(v, ctx.eps0);
  const int r = static_cast<int>(length0);
  auto infected_in = [&](const Configuration& z, std::int64_t col) {
    std::vector<int> off(d, 0);
    off[0] = static_cast<int>(length0 * col);
    std::size_t c = 0;
    for (SiteIndex y : ball_indices(g, g.translate(g.origin(), off), r)) c += z.states[y] == State::Infected;
    return static_cast<double>(c);
  };
  if (infected_in(ctx.at_epoch, m) >= floor_count) {
    for (std::int64_t dm : {-1, 0, 1}) {
      if (infected_in(ctx.at_next_epoch, m + dm) < floor_count) res.b2 = true;
    }
  }
  if (res.b2 || res.b1 == Tri::Bad) {
    res.overall = Tri::Bad;
  } else {
    res.overall = res.b1;
  }
  return res;
}

namespace {

struct Span {
  std::int64_t lo, hi;
};

// Output m (or n) values whose index rectangle fits inside [lo, hi].
Span fitting(std::int64_t lo, std::int64_t hi, std::int64_t scale, auto&& range) {
  const std::int64_t guess_lo = lo / std::max<std::int64_t>(scale, 1) - 3;
  const std::int64_t guess_hi = hi / std::max<std::int64_t>(scale, 1) + 3;
  Span s{1, 0};
  for (std::int64_t m = guess_lo; m <= guess_hi; ++m) {
    auto [a, b] = range(m);
    if (a >= lo && b <= hi) {
      if (s.lo > s.hi) s.lo = m;
      s.hi = m;
    }
  }
  return s;
}

}  // namespace

GridField classify_badN(const GridField& bad, const SurvScaleTable& tbl, int N, std::optional<GridField> rect) {
  require(N >= 1, "N must be >= 1");
  const std::int64_t a = tbl.alpha;
  if (!rect) {
    const auto a2 = static_cast<std::int64_t>(ipow(a, 2 * N - 1));
    const std::int64_t k = tbl.rows.at(N).h_ratio;
    Span ms = fitting(bad.m_min, bad.m_max, a2, [&](std::int64_t m) {
      auto ir = index_ranges(tbl, N, m, 0);
      return std::pair{ir.l, ir.r};
    });
    Span ns = fitting(bad.n_min, bad.n_max, k, [&](std::int64_t n) {
      auto ir = index_ranges(tbl, N, 0, n);
      return std::pair{ir.b, ir.t};
    });
    if (ms.lo > ms.hi || ns.lo > ns.hi) throw DomainError("input field too small for any scale-N point");
    rect = GridField(ms.lo, ms.hi, ns.lo, ns.hi);
  }
  GridField out(rect->m_min, rect->m_max, rect->n_min, rect->n_max);
  for (std::int64_t n = out.n_min; n <= out.n_max; ++n) {
    for (std::int64_t m = out.m_min; m <= out.m_max; ++m) {
      const IndexRange ir = index_ranges(tbl, N, m, n);
      std::int64_t imin = INT64_MAX, imax = INT64_MIN, jmin = INT64_MAX, jmax = INT64_MIN;
      std::vector<std::string> missing;
      for (std::int64_t j = ir.b; j <= ir.t; ++j) {
        for (std::int64_t i = ir.l; i <= ir.r; ++i) {
          if (!bad.is_defined(i, j)) {
            if (missing.size() < 8) missing.push_back("(" + std::to_string(i) + "," + std::to_string(j) + ")");
            continue;
          }
          if (!bad.at(i, j)) continue;
          imin = std::min(imin, i);
          imax = std::max(imax, i);
          jmin = std::min(jmin, j);
          jmax = std::max(jmax, j);
        }
      }
      if (!missing.empty()) {
        std::string msg = "scale-" + std::to_string(N - 1) + " field lacks indices";
        for (const auto& s : missing) msg += " " + s;
        throw DomainError(msg);
      }
      bool is_bad = false;
      if (jmin != INT64_MAX) {
        const std::int64_t di = imax - imin;
        is_bad = jmax - jmin > 1 || di * di > a;
      }
      out.set(m, n, is_bad);
    }
  }
  return out;
}

namespace {

GridField accessible0(const GridField& bad0) {
  require(bad0.contains(0, 0), "scale-0 field must contain (0,0)");
  const std::int64_t n_lo = std::max<std::int64_t>(0, bad0.n_min);
  GridField acc(bad0.m_min, bad0.m_max, n_lo, bad0.n_max);
  std::fill(acc.defined.begin(), acc.defined.end(), 0);
  for (std::int64_t n = n_lo; n <= acc.n_max; ++n) {
    for (std::int64_t m = acc.m_min; m <= acc.m_max; ++m) {
      // Every site a path from (0,0) to (m,n) can visit must be in the field.
      bool covered = true;
      for (std::int64_t k = 0; k <= n && covered; ++k) {
        const std::int64_t lo = std::max(-k, m - (n - k)), hi = std::min(k, m + (n - k));
        if (lo <= hi && (lo < bad0.m_min || hi > bad0.m_max || !bad0.is_defined(lo, k) || !bad0.is_defined(hi, k))) {
          covered = false;
        }
      }
      if (!covered) continue;
      bool value = false;
      if (!bad0.at(m, n)) {
        if (n == 0) {
          value = m == 0;
        } else {
          for (std::int64_t mp = m - 1; mp <= m + 1; ++mp) {
            if (acc.contains(mp, n - 1) && acc.defined[acc.slot(mp, n - 1)] && acc.at(mp, n - 1)) value = true;
          }
        }
      }
      acc.set(m, n, value);
    }
  }
  return acc;
}

}  // namespace

GridField accessible(const GridField& bad0, const SurvScaleTable& tbl, int N) {
  require(N >= 0 && N < static_cast<int>(tbl.rows.size()), "scale N outside the table");
  GridField acc = accessible0(bad0);
  for (int k = 1; k <= N; ++k) {
    const auto a2 = static_cast<std::int64_t>(ipow(tbl.alpha, 2 * k - 1));
    Span ms = fitting(acc.m_min, acc.m_max, a2, [&](std::int64_t m) {
      auto ir = index_ranges(tbl, k, m, 0);
      return std::pair{ir.l, ir.r};
    });
    std::int64_t n_hi = -1;
    while (index_ranges(tbl, k, 0, n_hi + 1).t <= acc.n_max) ++n_hi;
    if (ms.lo > ms.hi || n_hi < 0) throw DomainError("field too small for scale-" + std::to_string(k) + " accessibility");
    GridField next(ms.lo, ms.hi, 0, n_hi);
    std::fill(next.defined.begin(), next.defined.end(), 0);
    for (std::int64_t n = 0; n <= n_hi; ++n) {
      for (std::int64_t m = ms.lo; m <= ms.hi; ++m) {
        const IndexRange ir = index_ranges(tbl, k, m, n);
        bool ok = true;
        std::int64_t misses = 0;
        for (std::int64_t i = ir.l; i <= ir.r; ++i) {
          if (!acc.is_defined(i, ir.t)) {
            ok = false;
            break;
          }
          misses += !acc.at(i, ir.t);
        }
        if (ok) next.set(m, n, misses * misses <= tbl.alpha);
      }
    }
    acc = std::move(next);
  }
  return acc;
}

SpreadReport spread_check(const GridField& bad0, const SurvScaleTable& tbl, int N) {
  GridField bad = bad0;
  for (int k = 1; k <= N; ++k) bad = classify_badN(bad, tbl, k);
  const GridField acc = accessible(bad0, tbl, N);
  SpreadReport rep;
  for (std::int64_t n = acc.n_min; n < acc.n_max; ++n) {
    for (std::int64_t m = acc.m_min; m <= acc.m_max; ++m) {
      if (!acc.is_defined(m, n) || !acc.at(m, n)) continue;
      for (std::int64_t mp = m - 1; mp <= m + 1; ++mp) {
        if (!acc.is_defined(mp, n + 1) || !bad.is_defined(mp, n + 1)) continue;
        ++rep.instances;
        if (bad.at(mp, n + 1)) continue;
        ++rep.hypothesis;
        if (!acc.at(mp, n + 1)) ++rep.violations;
      }
    }
  }
  return rep;
}

namespace {

std::string fmt_ld(long double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.21Lg", x);
  return buf;
}

}  // namespace

std::string to_csv(const SurvScaleTable& t) {
  std::ostringstream os;
  os << "# schema_version=1\n";
  os << "# alpha=" << t.alpha << " degenerate=" << (t.degenerate ? "true" : "false") << "\n";
  os << "N,rho,length,side,h_prime,h,h_ratio,delta,sandwich\n";
  for (const auto& r : t.rows) {
    os << r.N << ',' << fmt_ld(r.rho) << ',' << fmt_ld(r.length) << ',' << fmt_ld(r.side) << ','
       << fmt_ld(r.h_prime) << ',' << fmt_ld(r.h) << ',' << r.h_ratio << ',' << fmt_ld(r.delta) << ','
       << (r.sandwich ? "true" : "false") << '\n';
  }
  return os.str();
}

std::string to_json(const SurvScaleTable& t) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["v"] = t.v;
  j["eps0"] = t.eps0;
  j["h0"] = t.h0;
  j["alpha"] = t.alpha;
  j["degenerate"] = t.degenerate;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json row;
    row["N"] = r.N;
    row["rho"] = r.rho;
    row["length"] = static_cast<double>(r.length);
    row["side"] = static_cast<double>(r.side);
    row["h_prime"] = static_cast<double>(r.h_prime);
    row["h"] = static_cast<double>(r.h);
    row["h_ratio"] = r.h_ratio;
    row["delta"] = static_cast<double>(r.delta);
    row["sandwich"] = r.sandwich;
    j["rows"].push_back(row);
  }
  return j.dump();
}

std::string to_csv(const ExtScaleTable& t) {
  std::ostringstream os;
  os << "# schema_version=1\n";
  os << "N,length,time,delta\n";
  for (const auto& r : t.rows) {
    os << r.N << ',' << fmt_ld(r.length) << ',' << fmt_ld(r.time) << ',' << fmt_ld(r.delta) << '\n';
  }
  return os.str();
}

std::string to_json(const ExtScaleTable& t) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["v"] = t.v;
  j["d"] = t.d;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json row;
    row["N"] = r.N;
    row["length"] = static_cast<double>(r.length);
    row["time"] = static_cast<double>(r.time);
    row["delta"] = static_cast<double>(r.delta);
    j["rows"].push_back(row);
  }
  return j.dump();
}

}  // namespace icpsim
