#include "icpsim/icp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "icpsim/errors.hpp"
#include "icpsim/rng.hpp"

namespace icpsim {

std::string to_string(State s) {
  switch (s) {
    case State::Empty: return "E";
    case State::Healthy: return "H";
    case State::Infected: return "I";
  }
  return "?";
}

std::string to_string(Engine e) {
  switch (e) {
    case Engine::FrozenMarks: return "frozen";
    case Engine::Dynamic: return "dynamic";
    case Engine::Streamed: return "streamed";
  }
  return "?";
}

Engine engine_from_string(const std::string& s) {
  if (s == "frozen") return Engine::FrozenMarks;
  if (s == "dynamic") return Engine::Dynamic;
  if (s == "streamed") return Engine::Streamed;
  throw DomainError("unknown engine '" + s + "'");
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::Swap: return "swap";
    case EventKind::Recovery: return "recovery";
    case EventKind::Transmission: return "transmission";
  }
  return "?";
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::None: return "none";
    case Outcome::OntoEmpty: return "onto_empty";
    case Outcome::OntoHealthy: return "onto_healthy";
    case Outcome::OntoInfected: return "onto_infected";
  }
  return "?";
}

std::size_t Configuration::infected_count() const {
  return static_cast<std::size_t>(std::count(states.begin(), states.end(), State::Infected));
}

std::vector<SiteIndex> Configuration::infected() const {
  std::vector<SiteIndex> out;
  for (SiteIndex x = 0; x < states.size(); ++x) {
    if (states[x] == State::Infected) out.push_back(x);
  }
  return out;
}

Occupancy Configuration::occupancy() const {
  Occupancy xi(states.size());
  for (std::size_t x = 0; x < states.size(); ++x) xi[x] = states[x] != State::Empty;
  return xi;
}

std::size_t infected_count(const Configuration& zeta) { return zeta.infected_count(); }

Configuration configuration_from(const Occupancy& xi, const std::vector<SiteIndex>& infected) {
  Configuration z;
  z.states.resize(xi.size());
  for (std::size_t x = 0; x < xi.size(); ++x) z.states[x] = xi[x] ? State::Healthy : State::Empty;
  for (SiteIndex x : infected) {
    require(x < xi.size(), "infected site outside geometry");
    z.states[x] = State::Infected;
  }
  return z;
}

Configuration sample_initial(const IcpParams& params, std::uint64_t seed) {
  require(params.p >= 0 && params.p <= 1, "density must lie in [0,1]");
  Occupancy xi = bernoulli_occupancy(params.geometry, params.p, seed);
  return configuration_from(xi, params.initial_infected);
}

Event apply_mark(Configuration& zeta, const Mark& mk) {
  auto& s = zeta.states;
  Event ev;
  ev.time = mk.time;
  ev.a = mk.a;
  ev.b = mk.b;
  ev.pre_a = s[mk.a];
  ev.pre_b = s[mk.b];
  switch (mk.kind) {
    case MarkKind::Jump:
      ev.kind = EventKind::Swap;
      std::swap(s[mk.a], s[mk.b]);
      break;
    case MarkKind::Recovery:
      ev.kind = EventKind::Recovery;
      if (s[mk.a] == State::Infected) s[mk.a] = State::Healthy;
      break;
    case MarkKind::Transmission:
      ev.kind = EventKind::Transmission;
      if (s[mk.a] == State::Infected) {
        ev.outcome = s[mk.b] == State::Empty     ? Outcome::OntoEmpty
                     : s[mk.b] == State::Healthy ? Outcome::OntoHealthy
                                                 : Outcome::OntoInfected;
        if (s[mk.b] == State::Healthy) s[mk.b] = State::Infected;
      }
      break;
  }
  ev.post_a = s[mk.a];
  ev.post_b = s[mk.b];
  return ev;
}

namespace {

// Shared state and bookkeeping of all engines. Keeps an indexable infected
// list so the dynamic engine can sample infected sites in O(1).
class Stepper {
 public:
  Stepper(const Geometry& g, const Configuration& zeta0, const RunOptions& opts)
      : g_(g), z_(zeta0), log_(opts.log == LogLevel::Effective), midline_(g.site_count(), 0),
        slot_(g.site_count(), kNone) {
    require(zeta0.states.size() == g.site_count(), "configuration does not match geometry");
    if (g.boundary() == Boundary::Torus) {
      for (SiteIndex x = 0; x < g.site_count(); ++x) midline_[x] = g.on_midline(x);
    }
    for (SiteIndex x = 0; x < g.site_count(); ++x) {
      if (z_.states[x] == State::Infected) add_infected(x);
    }
  }

  std::size_t infected() const { return list_.size(); }
  std::size_t infected_degree() const { return degree_sum_; }
  SiteIndex infected_at(std::size_t k) const { return list_[k]; }
  State state(SiteIndex x) const { return z_.states[x]; }
  bool wrapped() const { return wrapped_; }
  Configuration& config() { return z_; }
  std::vector<Event>& events() { return events_; }

  void swap(SiteIndex a, SiteIndex b, double t) {
    State sa = z_.states[a], sb = z_.states[b];
    if (sa == sb && sa != State::Infected) return;
    if (sa != sb) {
      z_.states[a] = sb;
      z_.states[b] = sa;
      if (sa == State::Infected) move_infected(a, b);
      if (sb == State::Infected) move_infected(b, a);
    }
    if (log_) events_.push_back({t, EventKind::Swap, a, b, sa, sb, sb, sa, Outcome::None});
  }

  void recover(SiteIndex x, double t) {
    if (z_.states[x] != State::Infected) return;
    z_.states[x] = State::Healthy;
    remove_infected(x);
    if (log_) events_.push_back({t, EventKind::Recovery, x, x, State::Infected, State::Infected, State::Healthy,
                                 State::Healthy, Outcome::None});
  }

  void transmit(SiteIndex a, SiteIndex b, double t) {
    if (z_.states[a] != State::Infected) return;
    const State sb = z_.states[b];
    Outcome o = sb == State::Empty ? Outcome::OntoEmpty : sb == State::Healthy ? Outcome::OntoHealthy
                                                                               : Outcome::OntoInfected;
    if (sb == State::Healthy) {
      z_.states[b] = State::Infected;
      add_infected(b);
    }
    if (log_) events_.push_back({t, EventKind::Transmission, a, b, State::Infected, sb, State::Infected,
                                 z_.states[b], o});
  }

 private:
  static constexpr std::uint32_t kNone = 0xffffffffu;

  void add_infected(SiteIndex x) {
    slot_[x] = static_cast<std::uint32_t>(list_.size());
    list_.push_back(x);
    degree_sum_ += g_.degree(x);
    if (midline_[x]) wrapped_ = true;
  }
  void remove_infected(SiteIndex x) {
    const std::uint32_t k = slot_[x];
    const SiteIndex last = list_.back();
    list_[k] = last;
    slot_[last] = k;
    list_.pop_back();
    slot_[x] = kNone;
    degree_sum_ -= g_.degree(x);
  }
  void move_infected(SiteIndex from, SiteIndex to) {
    const std::uint32_t k = slot_[from];
    list_[k] = to;
    slot_[to] = k;
    slot_[from] = kNone;
    degree_sum_ += g_.degree(to);
    degree_sum_ -= g_.degree(from);
    if (midline_[to]) wrapped_ = true;
  }

  const Geometry& g_;
  Configuration z_;
  bool log_;
  std::vector<std::uint8_t> midline_;
  std::vector<std::uint32_t> slot_;
  std::vector<SiteIndex> list_;
  std::size_t degree_sum_ = 0;
  bool wrapped_ = false;
  std::vector<Event> events_;
};

Trajectory finish(Stepper& st, const Configuration& zeta0, double horizon, double end_time, std::uint64_t seed,
                  Engine engine) {
  Trajectory tr;
  tr.initial = zeta0;
  tr.final_state = std::move(st.config());
  tr.events = std::move(st.events());
  tr.horizon = horizon;
  tr.end_time = end_time;
  tr.extinct = st.infected() == 0;
  tr.wrapped = st.wrapped();
  tr.seed = seed;
  tr.engine = engine;
  return tr;
}

Trajectory run_dynamic(const Configuration& zeta0, const IcpParams& params, double horizon, std::uint64_t seed,
                       const RunOptions& opts) {
  const Geometry& g = params.geometry;
  Stepper st(g, zeta0, opts);
  Rng rng(stream_key(seed, static_cast<std::uint64_t>(Domain::Engine), 1));
  const auto& edges = g.edges();
  const double jump_rate = params.v * static_cast<double>(edges.size());
  const std::size_t full_degree = 2 * static_cast<std::size_t>(g.dimension());
  double t = 0;
  double end = horizon;
  std::uint64_t steps = 0;
  while (true) {
    if (st.infected() == 0 && opts.stop_when_extinct) {
      end = t;
      break;
    }
    const double rec_rate = static_cast<double>(st.infected());
    const double tr_rate = params.lambda * static_cast<double>(st.infected_degree());
    const double total = jump_rate + rec_rate + tr_rate;
    if (total <= 0) break;
    t += rng.exponential(total);
    if (t > horizon) break;
    if (++steps > opts.capacity) throw CapacityError("event budget exceeded");
    const double u = rng.uniform() * total;
    if (u < jump_rate) {
      const Edge& e = edges[rng.below(edges.size())];
      st.swap(e.a, e.b, t);
    } else if (u < jump_rate + rec_rate) {
      st.recover(st.infected_at(rng.below(st.infected())), t);
    } else {
      // Infected site chosen proportionally to its degree by rejection.
      SiteIndex x;
      do {
        x = st.infected_at(rng.below(st.infected()));
      } while (rng.below(full_degree) >= g.degree(x));
      auto nb = g.neighbors(x);
      st.transmit(x, nb[rng.below(nb.size())], t);
    }
  }
  return finish(st, zeta0, horizon, std::min(end, horizon), seed, Engine::Dynamic);
}

// Unlogged variant of the streamed engine. The number of marks on [0,horizon]
// is Poisson(total * horizon) and, given that count, the carriers are i.i.d.
// and independent of the (uniform order statistic) times, so times are only
// materialized for the extinction event: the k-th of N uniform order
// statistics is horizon * Beta(k, N-k+1).
Trajectory run_streamed_unlogged(const Configuration& zeta0, const IcpParams& params, double horizon,
                                 std::uint64_t seed, const RunOptions& opts) {
  const Geometry& g = params.geometry;
  const double lam_max = opts.lambda_max.value_or(params.lambda);
  require(lam_max >= params.lambda, "lambda_max must be >= lambda");
  require(zeta0.states.size() == g.site_count(), "configuration does not match geometry");
  Rng rng(stream_key(seed, static_cast<std::uint64_t>(Domain::Engine), 3));
  const auto& edges = g.edges();
  const std::size_t n_edges = edges.size();
  const std::size_t n_sites = g.site_count();
  const std::size_t n_pairs = g.directed_pair_count();
  std::vector<SiteIndex> pair_src(n_pairs);
  for (SiteIndex x = 0; x < n_sites; ++x) {
    for (std::size_t k = g.pair_offset(x); k < g.pair_offset(x) + g.degree(x); ++k) pair_src[k] = x;
  }
  const SiteIndex* pair_dst = g.neighbors(0).data();
  std::vector<std::uint8_t> midline(n_sites, 0);
  if (g.boundary() == Boundary::Torus) {
    for (SiteIndex x = 0; x < n_sites; ++x) midline[x] = g.on_midline(x);
  }
  const double r_jump = params.v * static_cast<double>(n_edges);
  const double r_rec = static_cast<double>(n_sites);
  const double r_tr = lam_max * static_cast<double>(n_pairs);
  const double total = r_jump + r_rec + r_tr;
  const double keep = lam_max > 0 ? params.lambda / lam_max : 0.0;
  const double inv_v = params.v > 0 ? 1.0 / params.v : 0.0;
  const double inv_lam = lam_max > 0 ? 1.0 / lam_max : 0.0;

  Configuration z = zeta0;
  auto* s = reinterpret_cast<std::uint8_t*>(z.states.data());
  constexpr auto kI = static_cast<std::uint8_t>(State::Infected);
  constexpr auto kH = static_cast<std::uint8_t>(State::Healthy);
  std::size_t infected = 0;
  bool wrapped = false;
  for (SiteIndex x = 0; x < n_sites; ++x) {
    if (s[x] == kI) {
      ++infected;
      wrapped |= midline[x] != 0;
    }
  }

  double end = horizon;
  if (!(infected == 0 && opts.stop_when_extinct)) {
    std::poisson_distribution<std::uint64_t> count_dist(total * horizon);
    const std::uint64_t n_marks = total * horizon > 0 ? count_dist(rng) : 0;
    if (n_marks > opts.capacity * 8) throw CapacityError("event budget exceeded");
    for (std::uint64_t k = 1; k <= n_marks; ++k) {
      double u = rng.uniform() * total;
      if (u < r_jump) {
        const std::size_t e = std::min(n_edges - 1, static_cast<std::size_t>(u * inv_v));
        const SiteIndex a = edges[e].a, b = edges[e].b;
        const std::uint8_t sa = s[a], sb = s[b];
        s[a] = sb;
        s[b] = sa;
        wrapped |= ((sb == kI) & (midline[a] != 0)) | ((sa == kI) & (midline[b] != 0));
      } else if ((u -= r_jump) < r_rec) {
        const auto x = static_cast<SiteIndex>(std::min(n_sites - 1, static_cast<std::size_t>(u)));
        if (s[x] == kI) {
          s[x] = kH;
          if (--infected == 0 && opts.stop_when_extinct) {
            std::gamma_distribution<double> ga(static_cast<double>(k), 1.0);
            std::gamma_distribution<double> gb(static_cast<double>(n_marks - k + 1), 1.0);
            const double x1 = ga(rng), x2 = gb(rng);
            end = horizon * x1 / (x1 + x2);
            break;
          }
        }
      } else {
        const double r = (u - r_rec) * inv_lam;
        const std::size_t k2 = std::min(n_pairs - 1, static_cast<std::size_t>(r));
        const SiteIndex a = pair_src[k2], b = pair_dst[k2];
        if (s[a] == kI && s[b] == kH && r - static_cast<double>(k2) < keep) {
          s[b] = kI;
          ++infected;
          wrapped |= midline[b] != 0;
        }
      }
    }
  } else {
    end = 0;
  }
  Trajectory tr;
  tr.initial = zeta0;
  tr.final_state = std::move(z);
  tr.horizon = horizon;
  tr.end_time = end;
  tr.extinct = infected == 0;
  tr.wrapped = wrapped;
  tr.seed = seed;
  tr.engine = Engine::Streamed;
  return tr;
}

Trajectory run_streamed(const Configuration& zeta0, const IcpParams& params, double horizon, std::uint64_t seed,
                        const RunOptions& opts) {
  const Geometry& g = params.geometry;
  const double lam_max = opts.lambda_max.value_or(params.lambda);
  require(lam_max >= params.lambda, "lambda_max must be >= lambda");
  Stepper st(g, zeta0, opts);
  Rng rng(stream_key(seed, static_cast<std::uint64_t>(Domain::Engine), 2));
  const auto& edges = g.edges();
  const std::size_t n_edges = edges.size();
  const std::size_t n_sites = g.site_count();
  const std::size_t n_pairs = g.directed_pair_count();
  std::vector<SiteIndex> pair_src(n_pairs);
  for (SiteIndex x = 0; x < n_sites; ++x) {
    for (std::size_t k = g.pair_offset(x); k < g.pair_offset(x) + g.degree(x); ++k) pair_src[k] = x;
  }
  const SiteIndex* pair_dst = g.neighbors(0).data();
  const double r_jump = params.v * static_cast<double>(n_edges);
  const double r_rec = static_cast<double>(n_sites);
  const double r_tr = lam_max * static_cast<double>(n_pairs);
  const double total = r_jump + r_rec + r_tr;
  const double keep = lam_max > 0 ? params.lambda / lam_max : 0.0;
  double t = 0;
  double end = horizon;
  const bool running = !(st.infected() == 0 && opts.stop_when_extinct);
  if (!running) end = 0;
  while (running) {
    t += rng.exponential(total);
    if (t > horizon) break;
    // One uniform picks the carrier; for transmissions its fractional
    // remainder is the thinning variate, shared by every lambda <= lam_max.
    double u = rng.uniform() * total;
    if (u < r_jump) {
      const std::size_t e = std::min(n_edges - 1, static_cast<std::size_t>(u / params.v));
      st.swap(edges[e].a, edges[e].b, t);
    } else if ((u -= r_jump) < r_rec) {
      const auto x = static_cast<SiteIndex>(std::min(n_sites - 1, static_cast<std::size_t>(u)));
      st.recover(x, t);
      if (opts.stop_when_extinct && st.infected() == 0) {
        end = t;
        break;
      }
    } else {
      const double r = (u - r_rec) / lam_max;
      const std::size_t k = std::min(n_pairs - 1, static_cast<std::size_t>(r));
      if (r - static_cast<double>(k) < keep) st.transmit(pair_src[k], pair_dst[k], t);
    }
  }
  return finish(st, zeta0, horizon, end, seed, Engine::Streamed);
}

}  // namespace

Trajectory run_marks(const Configuration& zeta0, const Geometry& g, const MarkSet& m, double horizon,
                     const RunOptions& opts) {
  require(horizon <= m.window(), "horizon exceeds the mark window");
  Stepper st(g, zeta0, opts);
  double end = horizon;
  const bool running = !(st.infected() == 0 && opts.stop_when_extinct);
  if (!running) end = 0;
  if (running) {
    for (std::size_t i = 0, stop = m.upper(horizon); i < stop; ++i) {
      const Mark& mk = m.marks()[i];
      switch (mk.kind) {
        case MarkKind::Jump: st.swap(mk.a, mk.b, mk.time); break;
        case MarkKind::Recovery: st.recover(mk.a, mk.time); break;
        case MarkKind::Transmission: st.transmit(mk.a, mk.b, mk.time); break;
      }
      if (opts.stop_when_extinct && st.infected() == 0) {
        end = mk.time;
        break;
      }
    }
  }
  return finish(st, zeta0, horizon, end, m.seed(), Engine::FrozenMarks);
}

Trajectory run(const Configuration& zeta0, const IcpParams& params, double horizon, Engine engine,
               std::uint64_t seed, const RunOptions& opts) {
  require(std::isfinite(horizon) && horizon > 0, "horizon must be finite and > 0");
  require(params.v >= 0 && params.lambda >= 0, "rates must be >= 0");
  switch (engine) {
    case Engine::FrozenMarks: {
      SampleOptions so;
      so.lambda_max = opts.lambda_max;
      so.capacity = opts.capacity;
      MarkSet m = sample_marks(params.geometry, {params.v, params.lambda}, horizon, seed, so);
      Trajectory tr = run_marks(zeta0, params.geometry, m, horizon, opts);
      tr.seed = seed;
      return tr;
    }
    case Engine::Dynamic: return run_dynamic(zeta0, params, horizon, seed, opts);
    case Engine::Streamed:
      if (opts.log == LogLevel::None) return run_streamed_unlogged(zeta0, params, horizon, seed, opts);
      return run_streamed(zeta0, params, horizon, seed, opts);
  }
  throw DomainError("unknown engine");
}

Configuration replay(const Trajectory& traj, double until) {
  Configuration z = traj.initial;
  for (const Event& ev : traj.events) {
    if (ev.time > until) break;
    z.states[ev.a] = ev.post_a;
    z.states[ev.b] = ev.post_b;
  }
  return z;
}

ContainmentFlow::ContainmentFlow(const Geometry& g, const std::vector<SiteIndex>& seed_set)
    : g_(&g), in_(g.site_count(), 0), midline_(g.site_count(), 0) {
  if (g.boundary() == Boundary::Torus) {
    for (SiteIndex x = 0; x < g.site_count(); ++x) midline_[x] = g.on_midline(x);
  }
  for (SiteIndex x : seed_set) {
    require(x < g.site_count(), "seed site outside geometry");
    if (in_[x]) continue;
    pairs_ += contained_neighbors(x);
    in_[x] = 1;
    ++size_;
    if (midline_[x]) wrapped_ = true;
  }
}

std::size_t ContainmentFlow::contained_neighbors(SiteIndex x) const {
  std::size_t c = 0;
  for (SiteIndex y : g_->neighbors(x)) c += in_[y];
  return c;
}

void ContainmentFlow::apply(const Mark& mk) {
  if (mk.kind == MarkKind::Jump) {
    if (in_[mk.a] == in_[mk.b]) return;
    const SiteIndex from = in_[mk.a] ? mk.a : mk.b;
    const SiteIndex to = in_[mk.a] ? mk.b : mk.a;
    pairs_ -= contained_neighbors(from);
    in_[from] = 0;
    in_[to] = 1;
    pairs_ += contained_neighbors(to);
    if (midline_[to]) wrapped_ = true;
  } else if (mk.kind == MarkKind::Transmission) {
    if (!in_[mk.a] || in_[mk.b]) return;
    pairs_ += contained_neighbors(mk.b);
    in_[mk.b] = 1;
    ++size_;
    if (midline_[mk.b]) wrapped_ = true;
  }
}

std::vector<SiteIndex> ContainmentFlow::sites() const {
  std::vector<SiteIndex> out;
  for (SiteIndex x = 0; x < in_.size(); ++x) {
    if (in_[x]) out.push_back(x);
  }
  return out;
}

std::vector<SiteIndex> containment(const Geometry& g, const MarkSet& m, const std::vector<SiteIndex>& A, double s,
                                   double t, bool* wrapped) {
  require(0 <= s && s <= t && t <= m.window(), "need 0 <= s <= t <= window");
  ContainmentFlow psi(g, A);
  for (std::size_t i = m.upper(s), end = m.upper(t); i < end; ++i) psi.apply(m.marks()[i]);
  if (wrapped) *wrapped = psi.wrapped();
  return psi.sites();
}

KappaField::KappaField(const Geometry& g) : k_(g.site_count(), 0) { k_[g.origin()] = 1; }

void KappaField::apply(const Mark& mk) {
  if (mk.kind == MarkKind::Jump) {
    std::swap(k_[mk.a], k_[mk.b]);
  } else if (mk.kind == MarkKind::Transmission) {
    const std::uint64_t add = k_[mk.a];
    std::uint64_t& dst = k_[mk.b];
    dst = add > UINT64_MAX - dst ? UINT64_MAX : dst + add;
  }
}

std::vector<std::uint64_t> kappa(const Geometry& g, const MarkSet& m, double t) {
  require(0 <= t && t <= m.window(), "time outside the mark window");
  KappaField k(g);
  for (std::size_t i = 0, end = m.upper(t); i < end; ++i) k.apply(m.marks()[i]);
  return k.values();
}

CollisionStats collision_stats(const Geometry& g, const MarkSet& m, const std::vector<SiteIndex>& A, double h) {
  require(0 <= h && h <= m.window(), "horizon outside the mark window");
  ContainmentFlow psi(g, A);
  CollisionStats cs;
  double last = 0;
  for (std::size_t i = 0, end = m.upper(h); i < end; ++i) {
    const Mark& mk = m.marks()[i];
    cs.pair_time += static_cast<double>(psi.adjacent_pairs()) * (mk.time - last);
    last = mk.time;
    if (mk.kind == MarkKind::Transmission && std::isinf(cs.first_collision) && psi.contains(mk.a) &&
        psi.contains(mk.b)) {
      cs.first_collision = mk.time;
    }
    psi.apply(mk);
  }
  cs.pair_time += static_cast<double>(psi.adjacent_pairs()) * (h - last);
  cs.contained = psi.size();
  cs.wrapped = psi.wrapped();
  return cs;
}

namespace {

// Reachable-set propagation of infection paths through the logged events.
// `allowed` restricts where a path may be; `sources` are re-seeded after
// every event; returns true once a path touches `goal`.
template <class Allowed, class Source, class Goal>
bool propagate(const Trajectory& traj, double t0, double t1, Allowed&& allowed, Source&& source, Goal&& goal,
               bool reseed, std::vector<std::uint8_t>& reach) {
  Configuration z = replay(traj, t0);
  const std::size_t n = z.states.size();
  reach.assign(n, 0);
  for (SiteIndex y = 0; y < n; ++y) {
    if (z.states[y] == State::Infected && source(y)) reach[y] = 1;
  }
  for (SiteIndex y = 0; y < n; ++y) {
    if (reach[y] && goal(y)) return true;
  }
  for (const Event& ev : traj.events) {
    if (ev.time <= t0) continue;
    if (ev.time > t1) break;
    z.states[ev.a] = ev.post_a;
    z.states[ev.b] = ev.post_b;
    switch (ev.kind) {
      case EventKind::Swap: {
        const std::uint8_t ra = reach[ev.a], rb = reach[ev.b];
        reach[ev.a] = rb && allowed(ev.a);
        reach[ev.b] = ra && allowed(ev.b);
        break;
      }
      case EventKind::Recovery: reach[ev.a] = 0; break;
      case EventKind::Transmission:
        if (reach[ev.a] && allowed(ev.b) &&
            (ev.outcome == Outcome::OntoHealthy || ev.outcome == Outcome::OntoInfected)) {
          reach[ev.b] = 1;
        }
        break;
    }
    if (reseed) {
      for (SiteIndex y : {ev.a, ev.b}) {
        if (z.states[y] == State::Infected && source(y)) reach[y] = 1;
      }
    }
    if ((reach[ev.a] && goal(ev.a)) || (reach[ev.b] && goal(ev.b))) return true;
  }
  return false;
}

}  // namespace

HalfCrossing half_crossing(const Geometry& g, const Trajectory& traj, const SpaceTimeBox& box) {
  require(box.h > 0 && box.t0 >= 0, "box needs h > 0 and t0 >= 0");
  require(box.t0 + box.h <= traj.horizon, "trajectory does not cover the box");
  require(traj.initial.states.size() == g.site_count(), "trajectory does not match geometry");
  const auto in_ball = ball_mask(g, box.center, box.ell);
  const int d = g.dimension();
  std::vector<int> center(d);
  for (int k = 0; k < d; ++k) center[k] = g.coord(box.center, k);
  auto rel = [&](SiteIndex y, int axis) { return g.axis_delta(center[axis], g.coord(y, axis)); };
  std::vector<std::uint8_t> reach;

  HalfCrossing hc;
  {
    auto inside = [&](SiteIndex y) { return in_ball[y] != 0; };
    auto never = [](SiteIndex) { return false; };
    propagate(traj, box.t0, box.t0 + box.h / 2, inside, inside, never, false, reach);
    if (std::any_of(reach.begin(), reach.end(), [](std::uint8_t r) { return r != 0; })) {
      hc.kind = CrossingKind::Temporal;
      return hc;
    }
  }
  for (int axis = 0; axis < d; ++axis) {
    for (int side : {+1, -1}) {
      for (bool outward : {true, false}) {
        auto slab = [&](SiteIndex y) {
          if (!in_ball[y]) return false;
          const int r = side * rel(y, axis);
          return r >= 0 && r <= box.ell;
        };
        const int from = outward ? 0 : box.ell;
        const int to = outward ? box.ell : 0;
        auto start = [&](SiteIndex y) { return slab(y) && side * rel(y, axis) == from; };
        auto goal = [&](SiteIndex y) { return slab(y) && side * rel(y, axis) == to; };
        if (propagate(traj, box.t0, box.t0 + box.h, slab, start, goal, true, reach)) {
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

double default_p0(int d, double p, double lambda) { return p + 0.05 * (1.0 / (2 * d * lambda) - p); }
double default_p1(int d, double p, double lambda) { return p + 0.10 * (1.0 / (2 * d * lambda) - p); }

XiFlags xi_classify(const Geometry& g, const Configuration& zeta, double v, const XiThresholds& th) {
  require(v >= 1, "v must be >= 1");
  require(zeta.states.size() == g.site_count(), "configuration does not match geometry");
  const double lv = std::log(v);
  XiFlags f;
  f.L0 = th.L0.value_or(static_cast<int>(std::floor(std::sqrt(v) * lv * lv * lv * lv)));
  f.box_radius = th.box_radius.value_or(static_cast<int>(std::floor(std::pow(v, 0.1))));
  const double cap = th.infection_cap.value_or(lv * lv * lv);
  require(f.L0 >= 0 && f.box_radius >= 0, "radii must be >= 0");
  if (2 * f.L0 + 1 > g.side()) {
    throw DomainError("geometry side must be at least 2*L0+1 = " + std::to_string(2 * f.L0 + 1));
  }
  if (f.L0 >= f.box_radius) {
    const double volume = std::pow(2.0 * f.box_radius + 1, g.dimension());
    for (SiteIndex c : ball_indices(g, g.origin(), f.L0 - f.box_radius)) {
      std::size_t occ = 0;
      for (SiteIndex y : ball_indices(g, c, f.box_radius)) occ += zeta.states[y] != State::Empty;
      if (static_cast<double>(occ) >= th.p0 * volume) {
        f.dens = true;
        break;
      }
    }
  }
  std::size_t count = 0;
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    if (zeta.states[x] != State::Infected) continue;
    ++count;
    if (static_cast<double>(g.norm(x)) > f.L0 / 2.0) f.dist = true;
  }
  f.inf = static_cast<double>(count) > cap;
  return f;
}

std::vector<SigmaEpoch> sigma_chain(const Trajectory& traj) {
  std::vector<SigmaEpoch> out;
  std::size_t count = traj.initial.infected_count();
  for (const Event& ev : traj.events) {
    if (ev.kind == EventKind::Recovery && ev.pre_a == State::Infected) {
      --count;
      out.push_back({ev.time, count, -1});
    } else if (ev.kind == EventKind::Transmission && ev.pre_a == State::Infected) {
      const int inc = ev.outcome == Outcome::OntoHealthy ? 1 : 0;
      count += inc;
      out.push_back({ev.time, count, inc});
    }
  }
  return out;
}

}  // namespace icpsim
