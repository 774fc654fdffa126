// icpsim command-line front end.
//
// Exit codes: 0 success, 2 domain or range error, 3 capacity or I/O error,
// 64 usage error.

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "icpsim/brw.hpp"
#include "icpsim/coupling.hpp"
#include "icpsim/errors.hpp"
#include "icpsim/icp.hpp"
#include "icpsim/interchange.hpp"
#include "icpsim/lattice.hpp"
#include "icpsim/marks.hpp"
#include "icpsim/mc.hpp"
#include "icpsim/parallel.hpp"
#include "icpsim/renorm.hpp"
#include "icpsim/report.hpp"
#include "icpsim/rng.hpp"
#include "json.hpp"

using namespace icpsim;

namespace {

constexpr int kExitDomain = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitUsage = 64;

struct Common {
  int d = 1;
  int n = 64;
  std::string boundary = "torus";
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::string format = "json";
  std::string out = "-";

  Geometry geometry() const { return Geometry(d, n, boundary_from_string(boundary)); }
};

struct ModelFlags {
  double lambda = 1;
  double v = 1;
  double p = 0.5;
  double horizon = 10;
  std::string engine = "streamed";
  int infected_radius = 0;

  IcpParams params(const Geometry& g) const {
    IcpParams q{g, lambda, v, p, {}};
    q.initial_infected = ball_indices(g, g.origin(), infected_radius);
    return q;
  }
};

struct TableFlags {
  double v = 65536;
  double eps0 = 1.0 / 32;
  double h0 = 1;
  int N = 3;
  std::int64_t alpha = 0;  // 0: from v and eps0

  SurvScaleTable table() const {
    std::optional<std::int64_t> a;
    if (alpha > 0) a = alpha;
    return surv_scales(v, eps0, h0, std::max(N, 1), a);
  }
};

void add_common(CLI::App* s, Common& c, bool geometry = true) {
  if (geometry) {
    s->add_option("--d", c.d, "dimension");
    s->add_option("--n", c.n, "sites per axis");
    s->add_option("--boundary", c.boundary, "torus or hardwall");
  }
  s->add_option("--seed", c.seed, "master seed");
  s->add_option("--workers", c.workers, "worker threads (0: all cores)");
  s->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  s->add_option("--out", c.out, "output path, - for stdout");
  s->add_option("--config", "key=value file; flags given on the command line win");
}

void add_model(CLI::App* s, ModelFlags& m) {
  s->add_option("--lambda", m.lambda, "transmission rate");
  s->add_option("--v", m.v, "swap rate per edge");
  s->add_option("--p", m.p, "particle density");
  s->add_option("--horizon", m.horizon, "time horizon");
  s->add_option("--engine", m.engine, "frozen, dynamic or streamed");
  s->add_option("--infected-radius", m.infected_radius, "initially infected ball around the origin");
}

void add_table(CLI::App* s, TableFlags& t) {
  s->add_option("--v", t.v, "swap rate");
  s->add_option("--eps0", t.eps0, "epsilon_0");
  s->add_option("--h0", t.h0, "scale-0 height");
  s->add_option("--N", t.N, "largest scale");
  s->add_option("--alpha", t.alpha, "override alpha_v (0: computed)");
}

std::vector<std::pair<std::string, std::string>> resolved_config(const CLI::App* s) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* o : s->get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string name = o->get_lnames().front();
    if (name == "help" || name == "config" || name == "out" || name == "format") continue;
    std::string value;
    if (o->count() > 0) {
      value = o->as<std::string>();
    } else {
      value = o->get_default_str();
    }
    out.emplace_back(name, value);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << text;
  if (!text.empty() && text.back() != '\n') os << '\n';
  if (!os) throw IoError("write to " + path + " failed");
}

void emit(const Common& c, const Report& r) { write_text(c.out, c.format == "csv" ? to_csv(r) : to_json(r)); }

Cell num(double x) {
  if (std::isfinite(x)) return x;
  return std::string(x > 0 ? "inf" : "-inf");
}

Cell opt_num(const std::optional<double>& x) { return x ? Cell(*x) : Cell(std::string("none")); }

Cell i64(std::uint64_t x) { return static_cast<std::int64_t>(x); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw DomainError("bad number: " + s);
    return x;
  } catch (const std::logic_error&) {
    throw DomainError("bad number: " + s);
  }
}

GridField read_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read field file " + path);
  std::vector<std::array<std::int64_t, 3>> pts;
  for (std::string line; std::getline(is, line);) {
    if (line.empty() || line[0] == '#' || line.rfind("m,", 0) == 0) continue;
    auto parts = split(line, ',');
    if (parts.size() != 3) throw IoError("field line is not m,n,bad: " + line);
    try {
      pts.push_back({std::stoll(parts[0]), std::stoll(parts[1]), std::stoll(parts[2])});
    } catch (const std::logic_error&) {
      throw IoError("field line is not m,n,bad: " + line);
    }
  }
  if (pts.empty()) throw DomainError("field file is empty");
  std::int64_t m0 = pts[0][0], m1 = m0, n0 = pts[0][1], n1 = n0;
  for (const auto& p : pts) {
    m0 = std::min(m0, p[0]);
    m1 = std::max(m1, p[0]);
    n0 = std::min(n0, p[1]);
    n1 = std::max(n1, p[1]);
  }
  GridField f(m0, m1, n0, n1);
  std::fill(f.defined.begin(), f.defined.end(), 0);
  for (const auto& p : pts) f.set(p[0], p[1], p[2] != 0);
  return f;
}

void field_rows(Report& r, const GridField& f, const std::string& column) {
  r.columns = {"m", "n", column};
  for (std::int64_t n = f.n_min; n <= f.n_max; ++n) {
    for (std::int64_t m = f.m_min; m <= f.m_max; ++m) {
      if (f.is_defined(m, n)) r.add_row({m, n, static_cast<std::int64_t>(f.at(m, n))});
    }
  }
}

Report start(const std::string& command, const CLI::App* s) {
  Report r;
  r.command = command;
  std::cerr << "# " << command;
  for (const auto& [k, v] : resolved_config(s)) {
    std::cerr << " " << k << "=" << v;
    // The worker count never changes results, so artifacts leave it out.
    if (k != "workers") r.config.emplace_back(k, v);
  }
  std::cerr << "\n";
  return r;
}

std::string event_line(const Event& ev) {
  nlohmann::ordered_json j;
  j["time"] = ev.time;
  j["kind"] = to_string(ev.kind);
  j["a"] = ev.a;
  j["b"] = ev.b;
  j["pre_a"] = to_string(ev.pre_a);
  j["pre_b"] = to_string(ev.pre_b);
  j["post_a"] = to_string(ev.post_a);
  j["post_b"] = to_string(ev.post_b);
  j["outcome"] = to_string(ev.outcome);
  return j.dump();
}

// Splices key=value lines from --config FILE in front of the remaining
// arguments of the subcommand, so explicit flags (later, TakeLast) win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> file_args;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config file " + path);
    for (std::string line; std::getline(is, line);) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + line);
      std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
      key.erase(0, key.find_first_not_of('-'));
      while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.erase(value.begin());
      file_args.push_back("--" + key + "=" + value);
    }
  }
  if (file_args.empty() || rest.empty()) return rest;
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), file_args.begin(), file_args.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interchange-and-contact process simulator"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

  Common c;
  ModelFlags mf;
  TableFlags tf;
  std::uint64_t replicas = 1000;
  std::function<void()> action;

  // simulate
  {
    auto* s = app.add_subcommand("simulate", "one trajectory as JSON lines");
    add_common(s, c);
    add_model(s, mf);
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        const IcpParams q = mf.params(g);
        const Engine e = engine_from_string(mf.engine);
        const Configuration z0 = sample_initial(q, c.seed);
        const Trajectory tr = run(z0, q, mf.horizon, e, c.seed);
        Report head = start("simulate", s);
        nlohmann::ordered_json h;
        h["schema_version"] = kSchemaVersion;
        h["command"] = "simulate";
        h["config"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : head.config) h["config"][k] = v;
        std::string text = h.dump() + "\n";
        for (const Event& ev : tr.events) text += event_line(ev) + "\n";
        nlohmann::ordered_json tail;
        tail["end_time"] = tr.end_time;
        tail["extinct"] = tr.extinct;
        tail["wrapped"] = tr.wrapped;
        tail["infected"] = tr.final_state.infected_count();
        tail["events"] = tr.events.size();
        text += tail.dump() + "\n";
        write_text(c.out, text);
      };
    });
  }

  // survival
  {
    auto* s = app.add_subcommand("survival", "survival probability at the horizon");
    add_common(s, c);
    add_model(s, mf);
    s->add_option("--replicas", replicas, "replicas");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        SurvivalOptions so;
        so.engine = engine_from_string(mf.engine);
        so.workers = c.workers;
        const Estimate e = estimate_survival(mf.params(g), mf.horizon, replicas, c.seed, so);
        Report r = start("survival", s);
        add_estimate(r, "theta", e);
        r.summary.emplace_back("horizon", mf.horizon);
        r.summary.emplace_back("geometry", g.describe());
        r.columns = {"mean", "ci_low", "ci_high", "replicas", "excluded", "seed"};
        r.add_row({e.mean, e.ci_low, e.ci_high, i64(e.replicas), i64(e.excluded), std::to_string(e.seed)});
        emit(c, r);
      };
    });
  }

  // scan-lambda and trend
  double lo = 0.2, hi = 8, theta_star = 0.05, rel_tol = 0.01;
  std::string v_list = "1,4,16,64", ranges;
  auto add_scan = [&](CLI::App* s) {
    s->add_option("--theta-star", theta_star, "survival level defining the crossing");
    s->add_option("--rel-tol", rel_tol, "relative width of the final bracket");
    s->add_option("--replicas", replicas, "replicas per lambda");
  };
  auto scan_rows = [](Report& r, const ScanResult& sr) {
    r.summary.emplace_back("lambda_c", sr.lambda_c);
    r.summary.emplace_back("lambda_low", sr.lambda_low);
    r.summary.emplace_back("lambda_high", sr.lambda_high);
    r.summary.emplace_back("ci_low", opt_num(sr.ci_low));
    r.summary.emplace_back("ci_high", opt_num(sr.ci_high));
    r.summary.emplace_back("theta_star", sr.theta_star);
    r.summary.emplace_back("horizon", sr.horizon);
    r.summary.emplace_back("geometry", sr.geometry);
    r.columns = {"lambda", "mean", "ci_low", "ci_high", "replicas", "excluded", "simulated"};
    for (const ScanPoint& pt : sr.trace) {
      r.add_row({pt.lambda, pt.theta.mean, pt.theta.ci_low, pt.theta.ci_high, i64(pt.theta.replicas),
                 i64(pt.theta.excluded), i64(pt.simulated)});
    }
  };
  {
    auto* s = app.add_subcommand("scan-lambda", "bisection for the pseudo-critical lambda");
    add_common(s, c);
    add_model(s, mf);
    add_scan(s);
    s->add_option("--lambda-lo", lo, "lower end of the range");
    s->add_option("--lambda-hi", hi, "upper end of the range");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        ScanOptions so;
        so.engine = engine_from_string(mf.engine);
        so.workers = c.workers;
        so.rel_tol = rel_tol;
        const ScanResult sr = scan_lambda(mf.params(g), lo, hi, theta_star, mf.horizon, replicas, c.seed, so);
        Report r = start("scan-lambda", s);
        scan_rows(r, sr);
        emit(c, r);
      };
    });
  }
  {
    auto* s = app.add_subcommand("trend", "pseudo-critical lambda against v");
    add_common(s, c);
    add_model(s, mf);
    add_scan(s);
    s->add_option("--v-list", v_list, "comma-separated increasing v values");
    s->add_option("--ranges", ranges, "comma-separated lo:hi lambda ranges, one per v");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        std::vector<double> vs;
        for (const auto& x : split(v_list, ',')) vs.push_back(to_double(x));
        std::vector<TrendRange> rs;
        for (const auto& x : split(ranges, ',')) {
          auto ab = split(x, ':');
          if (ab.size() != 2) throw DomainError("range must be lo:hi, got " + x);
          rs.push_back({to_double(ab[0]), to_double(ab[1])});
        }
        ScanOptions so;
        so.engine = engine_from_string(mf.engine);
        so.workers = c.workers;
        so.rel_tol = rel_tol;
        const auto rows = trend_report(mf.params(g), vs, theta_star, mf.horizon, replicas, c.seed, rs, so);
        Report r = start("trend", s);
        r.summary.emplace_back("target", 1.0);
        r.summary.emplace_back("theta_star", theta_star);
        r.summary.emplace_back("horizon", mf.horizon);
        r.summary.emplace_back("geometry", g.describe());
        r.columns = {"v", "lambda_c", "normalized", "normalized_low", "normalized_high", "lambda_low", "lambda_high"};
        for (const auto& row : rows) {
          r.add_row({row.v, row.lambda_c, row.normalized, opt_num(row.normalized_low), opt_num(row.normalized_high),
                     row.scan.lambda_low, row.scan.lambda_high});
        }
        emit(c, r);
      };
    });
  }

  // meet
  int ell = 1, L = 8;
  double t = 1;
  bool exhaustive = false;
  {
    auto* s = app.add_subcommand("meet", "probability that two walks started 2 ell apart meet by ell^2");
    add_common(s, c, false);
    s->add_option("--d", c.d, "dimension");
    s->add_option("--ell", ell, "box radius");
    s->add_option("--replicas", replicas, "replicas");
    s->add_flag("--exhaustive", exhaustive, "minimize over all start pairs");
    s->callback([&, s] {
      action = [&, s] {
        const Estimate e = meet_probability(c.d, ell, replicas, c.seed, {exhaustive, c.workers});
        Report r = start("meet", s);
        add_estimate(r, "meet", e);
        r.columns = {"mean", "ci_low", "ci_high", "replicas", "excluded", "seed"};
        r.add_row({e.mean, e.ci_low, e.ci_high, i64(e.replicas), i64(e.excluded), std::to_string(e.seed)});
        emit(c, r);
      };
    });
  }

  // discr-ip
  {
    auto* s = app.add_subcommand("discr-ip", "interchange discrepancy probability and its bound");
    add_common(s, c);
    s->add_option("--ell", ell, "inner radius");
    s->add_option("--L", L, "outer radius");
    s->add_option("--t", t, "time window");
    s->add_option("--replicas", replicas, "replicas");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        const Estimate e = discr_ip(g, ell, L, t, replicas, c.seed, c.workers);
        Report r = start("discr-ip", s);
        add_estimate(r, "discr", e);
        r.summary.emplace_back("bound", discr_ip_bound(c.d, ell, L, t));
        emit(c, r);
      };
    });
  }

  // g-estimate
  double p_init = 0.5, p_thr = 0.6, speed = 1;
  std::string direction = "up";
  {
    auto* s = app.add_subcommand("g-estimate", "density deviation probability from a Bernoulli start");
    add_common(s, c);
    s->add_option("--ell", ell, "inner box radius");
    s->add_option("--L", L, "outer radius");
    s->add_option("--t", t, "time window");
    s->add_option("--p", p_init, "initial density");
    s->add_option("--threshold", p_thr, "density threshold");
    s->add_option("--direction", direction, "up or down")->check(CLI::IsMember({"up", "down"}));
    s->add_option("--speed", speed, "swap rate");
    s->add_option("--replicas", replicas, "replicas");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        const Occupancy xi0 =
            bernoulli_occupancy(g, p_init, stream_key(c.seed, static_cast<std::uint64_t>(Domain::Auxiliary), 1));
        DeviationWindow w{ell, L, t, p_thr, direction == "up" ? Direction::Up : Direction::Down};
        const Estimate e = estimate_g(g, xi0, w, replicas, c.seed, c.workers, speed);
        Report r = start("g-estimate", s);
        add_estimate(r, "g", e);
        if (direction == "up" && p_init < p_thr) r.summary.emplace_back("bound", g_bound(c.d, ell, L, t, p_init, p_thr));
        emit(c, r);
      };
    });
  }

  // containment, kappa, collisions
  int a_radius = 0;
  auto marks_for = [&](const Geometry& g) {
    return sample_marks(g, Rates{mf.v, mf.lambda}, mf.horizon, c.seed);
  };
  {
    auto* s = app.add_subcommand("containment", "containment flow from the origin");
    add_common(s, c);
    add_model(s, mf);
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        bool wrapped = false;
        const MarkSet m = marks_for(g);
        const auto psi = containment(g, m, {g.origin()}, 0, mf.horizon, &wrapped);
        Report r = start("containment", s);
        r.summary.emplace_back("size", i64(psi.size()));
        r.summary.emplace_back("wrapped", wrapped);
        r.columns = {"site"};
        for (SiteIndex x : psi) r.add_row({static_cast<std::int64_t>(x)});
        emit(c, r);
      };
    });
  }
  {
    auto* s = app.add_subcommand("kappa", "counting containment field from the origin");
    add_common(s, c);
    add_model(s, mf);
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        const auto k = kappa(g, marks_for(g), mf.horizon);
        Report r = start("kappa", s);
        r.columns = {"site", "kappa"};
        for (SiteIndex x = 0; x < k.size(); ++x) {
          if (k[x]) r.add_row({static_cast<std::int64_t>(x), static_cast<std::int64_t>(k[x])});
        }
        emit(c, r);
      };
    });
  }
  {
    auto* s = app.add_subcommand("collisions", "collision statistics of the containment flow");
    add_common(s, c);
    add_model(s, mf);
    s->add_option("--a-radius", a_radius, "seed set: ball of this radius around the origin");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        const auto cs = collision_stats(g, marks_for(g), ball_indices(g, g.origin(), a_radius), mf.horizon);
        Report r = start("collisions", s);
        r.summary.emplace_back("contained", i64(cs.contained));
        r.summary.emplace_back("pair_time", cs.pair_time);
        r.summary.emplace_back("first_collision", num(cs.first_collision));
        r.summary.emplace_back("wrapped", cs.wrapped);
        emit(c, r);
      };
    });
  }

  // half-cross
  double t0 = 0, h = 1;
  {
    auto* s = app.add_subcommand("half-cross", "half-crossing of a space-time box by infection paths");
    add_common(s, c);
    add_model(s, mf);
    s->add_option("--ell", ell, "box radius");
    s->add_option("--t0", t0, "box start time");
    s->add_option("--box-height", h, "box height");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        const IcpParams q = mf.params(g);
        const Trajectory tr = run(sample_initial(q, c.seed), q, t0 + h, engine_from_string(mf.engine), c.seed);
        const HalfCrossing hc = half_crossing(g, tr, SpaceTimeBox{g.origin(), ell, t0, h});
        Report r = start("half-cross", s);
        const char* kinds[] = {"none", "temporal", "spatial"};
        r.summary.emplace_back("kind", std::string(kinds[static_cast<int>(hc.kind)]));
        r.summary.emplace_back("axis", static_cast<std::int64_t>(hc.axis));
        r.summary.emplace_back("side", static_cast<std::int64_t>(hc.side));
        r.summary.emplace_back("outward", hc.outward);
        emit(c, r);
      };
    });
  }

  // brw, brw-extinction
  double beta = 2;
  std::uint64_t n0 = 1, pop_cap = 400;
  {
    auto* s = app.add_subcommand("brw", "branching random walk from the origin");
    add_common(s, c);
    s->add_option("--beta", beta, "branching rate");
    s->add_option("--v", mf.v, "jump rate per direction");
    s->add_option("--horizon", mf.horizon, "time horizon");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        const WalkerForest f = run_brw(g, {g.origin()}, beta, mf.v, mf.horizon, c.seed);
        Report r = start("brw", s);
        r.summary.emplace_back("alive", i64(f.alive_count()));
        r.summary.emplace_back("total", i64(f.walkers.size()));
        r.columns = {"id", "parent", "position", "birth", "death", "alive"};
        for (const Walker& w : f.walkers) {
          const bool alive = !std::isfinite(w.death);
          r.add_row({i64(w.id), w.parent, static_cast<std::int64_t>(w.position), w.birth,
                     alive ? f.horizon : w.death, alive});
        }
        emit(c, r);
      };
    });
  }
  {
    auto* s = app.add_subcommand("brw-extinction", "extinction frequency of the branching random walk");
    add_common(s, c, false);
    s->add_option("--beta", beta, "branching rate");
    s->add_option("--n0", n0, "ancestors");
    s->add_option("--horizon", mf.horizon, "time horizon");
    s->add_option("--replicas", replicas, "replicas");
    s->add_option("--pop-cap", pop_cap, "population counted as surviving");
    s->callback([&, s] {
      action = [&, s] {
        const auto ex = brw_extinction(beta, n0, mf.horizon, replicas, c.seed, pop_cap, c.workers);
        Report r = start("brw-extinction", s);
        add_estimate(r, "extinct", ex.extinct);
        r.summary.emplace_back("cap_bias_bound", ex.cap_bias_bound);
        r.summary.emplace_back("limit", beta <= 1 ? 1.0 : std::pow(1.0 / beta, static_cast<double>(n0)));
        emit(c, r);
      };
    });
  }

  // couple-ip
  double p_low = 0.5, p_high = 0.7, big_t = 640;
  std::uint64_t runs = 10;
  {
    auto* s = app.add_subcommand("couple-ip", "sprinkling coupling of two interchange processes");
    add_common(s, c);
    s->add_option("--ell", ell, "pairing box radius");
    s->add_option("--L", L, "outer radius");
    s->add_option("--t", t, "end of the pairing phase");
    s->add_option("--T", big_t, "end of the window");
    s->add_option("--p-low", p_low, "density of the sparser configuration");
    s->add_option("--p-high", p_high, "density of the denser configuration");
    s->add_option("--speed", speed, "swap rate");
    s->add_option("--runs", runs, "independent runs");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        CouplingParams cp{ell, L, t, big_t, speed};
        const auto aux = static_cast<std::uint64_t>(Domain::Auxiliary);
        const auto outs = run_replicas(runs, c.workers, [&](std::uint64_t i) {
          const Occupancy a = bernoulli_occupancy(g, p_low, stream_key(c.seed, aux, i, 1));
          const Occupancy b = bernoulli_occupancy(g, p_high, stream_key(c.seed, aux, i, 2));
          return couple_interchange(g, a, b, cp, replica_seed(c.seed, i));
        });
        Report r = start("couple-ip", s);
        std::int64_t ok = 0, dom = 0;
        r.columns = {"run", "success", "cause", "a1_time", "a2_time", "a3_time", "domination", "matched_at_t"};
        for (std::uint64_t i = 0; i < outs.size(); ++i) {
          const auto& o = outs[i];
          ok += o.success;
          dom += o.success && !o.domination_holds;
          r.add_row({i64(i), o.success, std::string(o.cause ? to_string(*o.cause) : "none"), num(o.a1_time),
                     num(o.a2_time), num(o.a3_time), o.domination_holds, i64(o.matched_at_t)});
        }
        r.summary.emplace_back("successes", ok);
        r.summary.emplace_back("domination_violations", dom);
        emit(c, r);
      };
    });
  }

  // couple-brw
  double h0 = 2;
  {
    auto* s = app.add_subcommand("couple-brw", "coupling of the infection with a branching random walk");
    add_common(s, c);
    add_model(s, mf);
    s->add_option("--h0", h0, "coupling horizon");
    s->callback([&, s] {
      action = [&, s] {
        const Geometry g = c.geometry();
        const PairedRun pr = couple_icp_brw(mf.params(g), h0, c.seed);
        Report r = start("couple-brw", s);
        r.summary.emplace_back("collision_time", num(pr.collision_time));
        r.summary.emplace_back("bijection_holds", pr.bijection_holds);
        r.summary.emplace_back("checked_events", i64(pr.checked_events));
        r.summary.emplace_back("attempts", i64(pr.attempts));
        r.summary.emplace_back("births", i64(pr.births));
        r.summary.emplace_back("hypotheses_hold", pr.hypotheses_hold);
        r.summary.emplace_back("bound_holds", pr.bound_holds);
        r.summary.emplace_back("walkers_at_h0", i64(pr.walkers_at_h0));
        r.summary.emplace_back("infected_at_h0", i64(pr.infected_at_h0));
        r.columns = {"j", "parent", "birth_site", "birth", "recovery", "s_measure", "max_d", "max_e", "max_gap"};
        for (std::size_t j = 0; j < pr.infections.size(); ++j) {
          const auto& x = pr.infections[j];
          r.add_row({i64(j), x.parent, static_cast<std::int64_t>(x.birth_site), x.birth, num(x.recovery), x.s_measure,
                     static_cast<std::int64_t>(x.max_d), static_cast<std::int64_t>(x.max_e),
                     static_cast<std::int64_t>(x.max_gap)});
        }
        emit(c, r);
      };
    });
  }

  // scales
  std::string mode = "surv";
  {
    auto* s = app.add_subcommand("scales", "renormalization scale tables");
    add_common(s, c, false);
    add_table(s, tf);
    s->add_option("--mode", mode, "surv or ext")->check(CLI::IsMember({"surv", "ext"}));
    s->add_option("--d", c.d, "dimension (ext mode)");
    s->callback([&, s] {
      action = [&, s] {
        start("scales", s);
        if (mode == "surv") {
          const auto tbl = tf.table();
          if (tbl.degenerate) std::cerr << "warning: alpha_v = " << tbl.alpha << " < 2, scales collapse\n";
          write_text(c.out, c.format == "csv" ? to_csv(tbl) : to_json(tbl));
        } else {
          const auto tbl = ext_scales(tf.v, c.d, tf.N);
          write_text(c.out, c.format == "csv" ? to_csv(tbl) : to_json(tbl));
        }
      };
    });
  }

  // index-ranges
  std::int64_t m_min = -2, m_max = 2, n_min = 0, n_max = 2;
  {
    auto* s = app.add_subcommand("index-ranges", "sub-box index ranges of scale-N boxes");
    add_common(s, c, false);
    add_table(s, tf);
    s->add_option("--m-min", m_min);
    s->add_option("--m-max", m_max);
    s->add_option("--n-min", n_min);
    s->add_option("--n-max", n_max);
    s->callback([&, s] {
      action = [&, s] {
        const auto tbl = tf.table();
        Report r = start("index-ranges", s);
        r.summary.emplace_back("alpha", tbl.alpha);
        r.columns = {"N", "m", "n", "l", "r", "b", "t"};
        for (int N = 1; N <= tf.N; ++N) {
          for (std::int64_t n = n_min; n <= n_max; ++n) {
            for (std::int64_t m = m_min; m <= m_max; ++m) {
              const auto ir = index_ranges(tbl, N, m, n);
              r.add_row({static_cast<std::int64_t>(N), m, n, ir.l, ir.r, ir.b, ir.t});
            }
          }
        }
        emit(c, r);
      };
    });
  }

  // classify
  int level = 1;
  std::string field_path;
  std::int64_t epoch = 0;
  double eps0_run = 1.0 / 32, p0 = 0.55;
  {
    auto* s = app.add_subcommand("classify", "scale-0 or scale-N bad points");
    add_common(s, c);
    add_table(s, tf);
    s->add_option("--level", level, "0: from a simulated run; N >= 1: from --field");
    s->add_option("--field", field_path, "CSV of m,n,bad at scale level-1");
    s->add_option("--lambda", mf.lambda, "transmission rate (level 0)");
    s->add_option("--p", mf.p, "particle density (level 0)");
    s->add_option("--p0", p0, "density level of the deviation event (level 0)");
    s->add_option("--epoch", epoch, "row n (level 0)");
    s->add_option("--m-min", m_min);
    s->add_option("--m-max", m_max);
    s->add_option("--infected-radius", mf.infected_radius, "initially infected ball (level 0)");
    s->add_option("--g-budget", replicas, "replicas for the density estimate (level 0)");
    s->callback([&, s] {
      action = [&, s] {
        Report r = start("classify", s);
        if (level == 0) {
          const Geometry g = c.geometry();
          IcpParams q = mf.params(g);
          q.v = tf.v;
          const double a = epoch * tf.h0, b = (epoch + 1) * tf.h0;
          const Trajectory tr = run(sample_initial(q, c.seed), q, b, Engine::Streamed, c.seed);
          Bad0Context ctx;
          ctx.geometry = g;
          ctx.at_epoch = replay(tr, a);
          ctx.at_next_epoch = replay(tr, b);
          ctx.v = tf.v;
          ctx.eps0 = tf.eps0;
          ctx.p_low = mf.p;
          ctx.p0 = p0;
          ctx.seed = c.seed;
          ctx.workers = c.workers;
          r.columns = {"m", "n", "b1", "b2", "bad", "g_mean", "g_ci_low", "g_ci_high", "threshold"};
          for (std::int64_t m = m_min; m <= m_max; ++m) {
            const Bad0Result br = classify_bad0(ctx, m, replicas);
            r.add_row({m, epoch, std::string(to_string(br.b1)), br.b2, std::string(to_string(br.overall)), br.g.mean,
                       br.g.ci_low, br.g.ci_high, br.threshold});
          }
        } else {
          if (field_path.empty()) throw DomainError("--field is required for level >= 1");
          field_rows(r, classify_badN(read_field(field_path), tf.table(), level), "bad");
        }
        emit(c, r);
      };
    });
  }

  // accessible, spread-check
  {
    auto* s = app.add_subcommand("accessible", "scale-N accessible points from a scale-0 bad field");
    add_common(s, c, false);
    add_table(s, tf);
    s->add_option("--field", field_path, "CSV of m,n,bad at scale 0")->required();
    s->callback([&, s] {
      action = [&, s] {
        Report r = start("accessible", s);
        field_rows(r, accessible(read_field(field_path), tf.table(), tf.N), "accessible");
        emit(c, r);
      };
    });
  }
  double bad_prob = 0.05;
  std::int64_t width = 40, height = 40;
  {
    auto* s = app.add_subcommand("spread-check", "accessibility spreading through good points");
    add_common(s, c, false);
    add_table(s, tf);
    s->add_option("--field", field_path, "CSV of m,n,bad at scale 0 (default: random field)");
    s->add_option("--bad-prob", bad_prob, "bad probability of the random field");
    s->add_option("--width", width, "random field: m in [-width, width]");
    s->add_option("--height", height, "random field: n in [0, height)");
    s->callback([&, s] {
      action = [&, s] {
        GridField f;
        if (!field_path.empty()) {
          f = read_field(field_path);
        } else {
          f = GridField(-width, width, 0, height - 1);
          Rng rng(stream_key(c.seed, static_cast<std::uint64_t>(Domain::Auxiliary), 7));
          for (std::int64_t n = 0; n < height; ++n) {
            for (std::int64_t m = -width; m <= width; ++m) f.set(m, n, rng.bernoulli(bad_prob));
          }
        }
        const SpreadReport sr = spread_check(f, tf.table(), tf.N);
        Report r = start("spread-check", s);
        r.summary.emplace_back("instances", i64(sr.instances));
        r.summary.emplace_back("hypothesis", i64(sr.hypothesis));
        r.summary.emplace_back("violations", i64(sr.violations));
        emit(c, r);
      };
    });
  }

  try {
    const auto args = expand_config(argc, argv);
    std::vector<const char*> cargs{argv[0]};
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCapacity;
  }

  try {
    if (action) action();
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
