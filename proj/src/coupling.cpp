#include "icpsim/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "icpsim/errors.hpp"
#include "icpsim/rng.hpp"

namespace icpsim {

const char* to_string(FailureCause c) {
  switch (c) {
    case FailureCause::A1: return "A1";
    case FailureCause::A2: return "A2";
    case FailureCause::A3: return "A3";
  }
  return "?";
}

std::vector<SiteIndex> pairing_cover(const Geometry& g, int ell, int L) {
  require(ell >= 1, "ell must be >= 1");
  if (L < 2 * ell) throw DomainError("cover needs L >= 2 ell");
  ball_indices(g, g.origin(), L);  // B_0(L) must fit without aliasing
  const int inner = L - 2 * ell;
  std::vector<int> axis_centers;
  for (int c = -inner + ell; c - ell <= inner; c += 2 * ell + 1) axis_centers.push_back(c);
  const int d = g.dimension();
  std::vector<SiteIndex> out;
  std::vector<std::size_t> idx(d, 0);
  std::vector<int> off(d);
  while (true) {
    for (int k = 0; k < d; ++k) off[k] = axis_centers[idx[k]];
    out.push_back(g.translate(g.origin(), off));
    int k = 0;
    while (k < d && idx[k] + 1 == axis_centers.size()) idx[k++] = 0;
    if (k == d) break;
    ++idx[k];
  }
  return out;
}

namespace {

struct Cover {
  std::vector<SiteIndex> centers;
  std::vector<std::vector<SiteIndex>> sites;  // per box, sorted
  std::vector<std::int32_t> box_of;           // -1 outside the cover
};

Cover make_cover(const Geometry& g, int ell, int L) {
  Cover c;
  c.centers = pairing_cover(g, ell, L);
  c.box_of.assign(g.site_count(), -1);
  for (std::size_t b = 0; b < c.centers.size(); ++b) {
    c.sites.push_back(ball_indices(g, c.centers[b], ell));
    for (SiteIndex x : c.sites.back()) c.box_of[x] = static_cast<std::int32_t>(b);
  }
  return c;
}

bool counts_good(const Cover& c, const std::vector<std::int32_t>& at1, const std::vector<std::int32_t>& at2) {
  for (const auto& box : c.sites) {
    long n1 = 0, n2 = 0;
    for (SiteIndex x : box) {
      n1 += at1[x] >= 0;
      n2 += at2[x] >= 0;
    }
    if (n1 > n2) return false;
  }
  return true;
}

}  // namespace

std::optional<Pairing> good_pairing(const Geometry& g, const Occupancy& xi, const Occupancy& xi2, int ell, int L) {
  require(xi.size() == g.site_count() && xi2.size() == g.site_count(), "occupancy does not match geometry");
  Cover c = make_cover(g, ell, L);
  Pairing p;
  p.cover = c.centers;
  for (const auto& box : c.sites) {
    std::vector<SiteIndex> a, b;
    for (SiteIndex x : box) {
      if (xi[x] && xi2[x]) {
        p.pairs.push_back({x, x});
      } else {
        if (xi[x]) a.push_back(x);
        if (xi2[x]) b.push_back(x);
      }
    }
    if (a.size() > b.size()) return std::nullopt;
    for (std::size_t i = 0; i < a.size(); ++i) p.pairs.push_back({a[i], b[i]});
  }
  return p;
}

namespace {

class InterchangeCoupling {
 public:
  InterchangeCoupling(const Geometry& g, const Occupancy& xi, const Occupancy& xi2, const CouplingParams& prm)
      : g_(g), prm_(prm), cover_(make_cover(g, prm.ell, prm.L)), at1_(g.site_count(), -1), at2_(g.site_count(), -1) {
    for (SiteIndex x = 0; x < g.site_count(); ++x) {
      if (xi[x]) {
        at1_[x] = static_cast<std::int32_t>(pos1_.size());
        pos1_.push_back(x);
      }
      if (xi2[x]) {
        at2_[x] = static_cast<std::int32_t>(pos2_.size());
        pos2_.push_back(x);
      }
    }
    partner1_.assign(pos1_.size(), -1);
    partner2_.assign(pos2_.size(), -1);
    matched_.assign(pos1_.size(), 0);
    bad_.assign(pos1_.size(), 0);
    const int half = prm.L / 2, quarter = prm.L / 4;
    source_.assign(g.site_count(), 0);
    target_.assign(g.site_count(), 0);
    for (SiteIndex x : boundary_indices(g, g.origin(), half)) source_[x] = 1;
    for (SiteIndex x : boundary_indices(g, g.origin(), quarter)) target_[x] = 1;
    tainted_ = source_;
    inner_ = ball_mask(g, g.origin(), quarter);
  }

  CouplingOutcome run(std::uint64_t seed) {
    Rng rng(stream_key(seed, static_cast<std::uint64_t>(Domain::Coupling)));
    const auto& edges = g_.edges();
    const double total = 2.0 * prm_.speed * static_cast<double>(edges.size());
    const double epoch_len = static_cast<double>(prm_.ell) * prm_.ell;
    const auto last_epoch = static_cast<std::uint64_t>(std::floor(prm_.t / epoch_len));
    std::uint64_t next_epoch = 0;
    bool snapped = false;
    double t = 0;
    while (true) {
      const double tn = t + rng.exponential(total);
      while (next_epoch <= last_epoch && static_cast<double>(next_epoch) * epoch_len <= std::min(tn, prm_.t)) {
        refresh(static_cast<double>(next_epoch) * epoch_len);
        ++next_epoch;
      }
      if (!snapped && tn > prm_.t) {
        snapshot();
        snapped = true;
      }
      if (tn > prm_.T) break;
      t = tn;
      const std::uint64_t k = rng.below(2 * edges.size());
      step(edges[k >> 1], (k & 1) != 0, t);
    }
    out_.xi_at_T = occupancy(at1_);
    out_.xi2_at_T = occupancy(at2_);
    const double first = std::min({out_.a1_time, out_.a2_time, out_.a3_time});
    out_.success = std::isinf(first);
    if (!out_.success) {
      out_.cause = first == out_.a1_time ? FailureCause::A1
                   : first == out_.a2_time ? FailureCause::A2
                                           : FailureCause::A3;
    }
    return out_;
  }

  bool pairs_stayed_together() const { return together_; }

 private:
  Occupancy occupancy(const std::vector<std::int32_t>& at) const {
    Occupancy xi(at.size());
    for (std::size_t x = 0; x < at.size(); ++x) xi[x] = at[x] >= 0;
    return xi;
  }

  void pair(std::int32_t a, std::int32_t b) {
    partner1_[a] = b;
    partner2_[b] = a;
    if (pos1_[a] == pos2_[b]) matched_[a] = 1;
  }

  void refresh(double time) {
    if (!counts_good(cover_, at1_, at2_)) {
      out_.a1_time = std::min(out_.a1_time, time);
      return;
    }
    for (std::size_t a = 0; a < pos1_.size(); ++a) {
      if (!matched_[a] && partner1_[a] >= 0) {
        partner2_[partner1_[a]] = -1;
        partner1_[a] = -1;
      }
    }
    for (const auto& box : cover_.sites) {
      std::vector<std::int32_t> free1, free2;
      for (SiteIndex x : box) {
        const std::int32_t a = at1_[x], b = at2_[x];
        const bool fa = a >= 0 && !matched_[a];
        const bool fb = b >= 0 && partner2_[b] < 0;
        if (fa && fb) {
          pair(a, b);
        } else {
          if (fa) free1.push_back(a);
          if (fb) free2.push_back(b);
        }
      }
      for (std::size_t i = 0; i < free1.size(); ++i) pair(free1[i], free2[i]);
    }
  }

  void snapshot() {
    out_.xi_at_t = occupancy(at1_);
    for (std::size_t a = 0; a < pos1_.size(); ++a) {
      out_.matched_at_t += matched_[a];
      bad_[a] = !matched_[a];
      if (bad_[a] && inner_[pos1_[a]]) out_.a3_time = std::min(out_.a3_time, prm_.t);
    }
    for (SiteIndex x = 0; x < g_.site_count(); ++x) {
      if (inner_[x] && at1_[x] >= 0 && at2_[x] < 0) out_.domination_holds = false;
    }
    after_t_ = true;
  }

  bool matched_at(SiteIndex x) const { return at1_[x] >= 0 && matched_[at1_[x]]; }

  void step(const Edge& e, bool family2, double t) {
    const SiteIndex a = e.a, b = e.b;
    const bool touches_matched = matched_at(a) || matched_at(b);
    if (family2) {
      std::swap(at2_[a], at2_[b]);
      if (at2_[a] >= 0) pos2_[at2_[a]] = a;
      if (at2_[b] >= 0) pos2_[at2_[b]] = b;
    }
    if (family2 == touches_matched) {
      std::swap(at1_[a], at1_[b]);
      if (at1_[a] >= 0) pos1_[at1_[a]] = a;
      if (at1_[b] >= 0) pos1_[at1_[b]] = b;
      std::swap(tainted_[a], tainted_[b]);
      tainted_[a] |= source_[a];
      tainted_[b] |= source_[b];
      if ((tainted_[a] && target_[a]) || (tainted_[b] && target_[b])) out_.a2_time = std::min(out_.a2_time, t);
    }
    for (SiteIndex x : {a, b}) {
      const std::int32_t p = at1_[x];
      if (p >= 0) {
        if (matched_[p]) {
          if (pos2_[partner1_[p]] != x) together_ = false;
        } else if (partner1_[p] >= 0 && pos2_[partner1_[p]] == x) {
          matched_[p] = 1;
        }
      }
      const std::int32_t q = at2_[x];
      if (q >= 0 && partner2_[q] >= 0 && !matched_[partner2_[q]] && pos1_[partner2_[q]] == x) {
        matched_[partner2_[q]] = 1;
      }
    }
    if (after_t_) {
      for (SiteIndex x : {a, b}) {
        if (!inner_[x]) continue;
        if (at1_[x] >= 0 && bad_[at1_[x]]) out_.a3_time = std::min(out_.a3_time, t);
        if (at1_[x] >= 0 && at2_[x] < 0) out_.domination_holds = false;
      }
    }
  }

  const Geometry& g_;
  CouplingParams prm_;
  Cover cover_;
  std::vector<std::int32_t> at1_, at2_;
  std::vector<SiteIndex> pos1_, pos2_;
  std::vector<std::int32_t> partner1_, partner2_;
  std::vector<std::uint8_t> matched_, bad_;
  std::vector<std::uint8_t> source_, target_, tainted_, inner_;
  bool after_t_ = false;
  bool together_ = true;
  CouplingOutcome out_;
};

}  // namespace

CouplingOutcome couple_interchange(const Geometry& g, const Occupancy& xi, const Occupancy& xi2,
                                   const CouplingParams& params, std::uint64_t seed) {
  require(xi.size() == g.site_count() && xi2.size() == g.site_count(), "occupancy does not match geometry");
  require(params.ell >= 1 && params.L >= 4, "need ell >= 1 and L >= 4");
  require(0 <= params.t && params.t <= params.T, "need 0 <= t <= T");
  require(params.speed > 0, "speed must be > 0");
  InterchangeCoupling c(g, xi, xi2, params);
  CouplingOutcome out = c.run(seed);
  if (!c.pairs_stayed_together()) throw std::logic_error("matched pair separated");
  return out;
}

namespace {

struct Step {
  int axis = 0;
  int sign = 0;
};

Step displacement(const Geometry& g, SiteIndex from, SiteIndex to) {
  for (int k = 0; k < g.dimension(); ++k) {
    const int dlt = g.axis_delta(g.coord(from, k), g.coord(to, k));
    if (dlt != 0) return {k, dlt};
  }
  return {};
}

int linf(const std::vector<int>& v) {
  int m = 0;
  for (int c : v) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

PairedRun couple_icp_brw(const IcpParams& params, double h0, std::uint64_t seed, const CoupleBrwOptions& opts) {
  const Geometry& g = params.geometry;
  require(g.boundary() == Boundary::Torus, "the ICP-BRW coupling runs on a torus");
  require(h0 > 0, "h0 must be > 0");
  const int d = g.dimension();
  const auto k_cpl = static_cast<std::uint64_t>(Domain::Coupling);

  Configuration zeta = sample_initial(params, seed);
  SampleOptions so;
  so.capacity = opts.capacity;
  MarkSet m = sample_marks(g, {params.v, params.lambda}, h0, stream_key(seed, k_cpl, 1), so);
  ContainmentFlow psi(g, params.initial_infected);

  auto& st = zeta.states;
  std::vector<std::int32_t> inf_at(g.site_count(), -1);
  struct Live {
    SiteIndex x = 0, w = 0;
    std::vector<int> D, E;
    bool active = true;
    bool in_s = false;
    double last = 0;
    Rng rng{0};
  };
  PairedRun out;
  std::vector<Live> live;
  using Next = std::pair<double, std::int32_t>;
  std::priority_queue<Next, std::vector<Next>, std::greater<>> ytimes;
  std::size_t walkers = 0;
  const double yrate = 2.0 * d * params.v;

  auto has_infected_neighbor = [&](SiteIndex x) {
    for (SiteIndex y : g.neighbors(x)) {
      if (inf_at[y] >= 0) return true;
    }
    return false;
  };
  auto settle = [&](std::int32_t j, double t) {
    Live& l = live[j];
    if (l.in_s) out.infections[j].s_measure += t - l.last;
    l.last = t;
  };
  auto track_gap = [&](std::int32_t j) {
    out.infections[j].max_gap = std::max(out.infections[j].max_gap, g.distance(live[j].x, live[j].w));
  };
  auto add_infection = [&](SiteIndex x, std::int32_t parent, double t) {
    const auto j = static_cast<std::int32_t>(live.size());
    InfectionRecord rec;
    rec.parent = parent;
    rec.birth_site = x;
    rec.birth = t;
    out.infections.push_back(rec);
    Live l;
    l.x = x;
    l.w = parent >= 0 ? live[parent].w : x;
    l.D.assign(d, 0);
    l.E.assign(d, 0);
    l.last = t;
    l.rng = Rng(stream_key(seed, k_cpl, 2, static_cast<std::uint64_t>(j)));
    ytimes.push({t + l.rng.exponential(yrate), j});
    live.push_back(std::move(l));
    inf_at[x] = j;
    ++walkers;
    track_gap(j);
  };
  auto nearby = [&](SiteIndex a, SiteIndex b) {
    std::vector<std::int32_t> js;
    auto visit = [&](SiteIndex x) {
      if (inf_at[x] >= 0) js.push_back(inf_at[x]);
    };
    visit(a);
    visit(b);
    for (SiteIndex y : g.neighbors(a)) visit(y);
    for (SiteIndex y : g.neighbors(b)) visit(y);
    std::sort(js.begin(), js.end());
    js.erase(std::unique(js.begin(), js.end()), js.end());
    return js;
  };

  for (SiteIndex x : params.initial_infected) {
    if (inf_at[x] < 0) add_infection(x, -1, 0.0);
  }
  for (std::size_t j = 0; j < live.size(); ++j) live[j].in_s = has_infected_neighbor(live[j].x);

  std::optional<SiteIndex> extra_walker;
  double end_time = h0;
  const auto& marks = m.marks();
  std::size_t mi = 0;
  while (true) {
    const double tm = mi < marks.size() ? marks[mi].time : std::numeric_limits<double>::infinity();
    const double ty = ytimes.empty() ? std::numeric_limits<double>::infinity() : ytimes.top().first;
    if (std::min(tm, ty) > h0) break;
    if (ty < tm) {
      const std::int32_t j = ytimes.top().second;
      ytimes.pop();
      Live& l = live[j];
      if (!l.active) continue;
      settle(j, ty);
      if (l.in_s) {
        const std::uint64_t dir = l.rng.below(2 * static_cast<std::uint64_t>(d));
        const int axis = static_cast<int>(dir / 2), sign = (dir & 1) ? 1 : -1;
        l.E[axis] += sign;
        SiteIndex y;
        g.step(l.w, axis, sign, y);
        l.w = y;
        out.infections[j].max_e = std::max(out.infections[j].max_e, linf(l.E));
        track_gap(j);
      }
      ytimes.push({ty + l.rng.exponential(yrate), j});
      continue;
    }
    const Mark& mk = marks[mi++];
    const double t = mk.time;
    if (mk.kind == MarkKind::Transmission && psi.contains(mk.a) && psi.contains(mk.b)) {
      out.collision_time = t;
      if (st[mk.a] == State::Infected) extra_walker = live[inf_at[mk.a]].w;
      end_time = t;
      break;
    }
    auto affected = nearby(mk.a, mk.b);
    for (auto j : affected) settle(j, t);
    std::vector<std::int32_t> moved;
    switch (mk.kind) {
      case MarkKind::Jump: {
        for (auto [from, to] : {std::pair{mk.a, mk.b}, std::pair{mk.b, mk.a}}) {
          const std::int32_t j = inf_at[from];
          if (j < 0) continue;
          const Step s = displacement(g, from, to);
          Live& l = live[j];
          if (l.in_s) {
            l.D[s.axis] += s.sign;
            out.infections[j].max_d = std::max(out.infections[j].max_d, linf(l.D));
          } else {
            SiteIndex y;
            g.step(l.w, s.axis, s.sign, y);
            l.w = y;
          }
          l.x = to;
          moved.push_back(j);
        }
        std::swap(st[mk.a], st[mk.b]);
        std::swap(inf_at[mk.a], inf_at[mk.b]);
        break;
      }
      case MarkKind::Recovery:
        if (st[mk.a] == State::Infected) {
          const std::int32_t j = inf_at[mk.a];
          out.infections[j].recovery = t;
          live[j].active = false;
          live[j].in_s = false;
          --walkers;
          st[mk.a] = State::Healthy;
          inf_at[mk.a] = -1;
        }
        break;
      case MarkKind::Transmission:
        if (st[mk.a] == State::Infected) {
          ++out.attempts;
          if (st[mk.b] == State::Healthy) {
            ++out.births;
            st[mk.b] = State::Infected;
            add_infection(mk.b, inf_at[mk.a], t);
            affected.push_back(inf_at[mk.b]);
          }
        }
        break;
    }
    psi.apply(mk);
    for (SiteIndex x : {mk.a, mk.b}) {
      for (SiteIndex y : g.neighbors(x)) {
        if (inf_at[y] >= 0) affected.push_back(inf_at[y]);
      }
      if (inf_at[x] >= 0) affected.push_back(inf_at[x]);
    }
    for (auto j : affected) {
      if (live[j].active) live[j].in_s = has_infected_neighbor(live[j].x);
    }
    for (auto j : moved) track_gap(j);
    const auto infected_now = static_cast<std::size_t>(std::count(st.begin(), st.end(), State::Infected));
    ++out.checked_events;
    if (infected_now != walkers) out.bijection_holds = false;
  }
  for (std::size_t j = 0; j < live.size(); ++j) {
    if (live[j].active) settle(static_cast<std::int32_t>(j), end_time);
  }
  out.contained_at_end = psi.size();
  out.infected_at_h0 = walkers;

  const double c = std::pow(params.v, 7.0 / 16.0);
  const double s_cap = std::pow(params.v, -0.25);
  out.hypotheses_hold = static_cast<double>(out.contained_at_end) <= opts.psi_cap;
  for (const auto& rec : out.infections) {
    if (rec.s_measure > s_cap || rec.max_d + rec.max_e > c) out.hypotheses_hold = false;
  }
  for (std::size_t j = 0; j < out.infections.size(); ++j) {
    if (out.infections[j].max_gap > static_cast<double>(j + 1) * (c + 1)) out.bound_holds = false;
  }

  if (std::isfinite(out.collision_time)) {
    WalkerForest f;
    for (const Live& l : live) {
      if (!l.active) continue;
      Walker w;
      w.id = f.walkers.size();
      w.position = l.w;
      w.birth = out.collision_time;
      f.walkers.push_back(w);
    }
    if (extra_walker) {
      Walker w;
      w.id = f.walkers.size();
      w.position = *extra_walker;
      w.birth = out.collision_time;
      f.walkers.push_back(w);
    }
    const double beta = 2.0 * d * params.p * params.lambda;
    continue_brw(g, f, out.collision_time, beta, params.v, h0, stream_key(seed, k_cpl, 3));
    out.walkers_at_h0 = f.alive_count();
  } else {
    out.walkers_at_h0 = walkers;
  }
  return out;
}

}  // namespace icpsim
