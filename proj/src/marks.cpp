#include "icpsim/marks.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "icpsim/errors.hpp"
#include "icpsim/rng.hpp"
#include "json.hpp"

namespace icpsim {

std::string to_string(MarkKind k) {
  switch (k) {
    case MarkKind::Jump: return "jump";
    case MarkKind::Recovery: return "recovery";
    case MarkKind::Transmission: return "transmission";
  }
  return "?";
}

MarkKind mark_kind_from_string(const std::string& s) {
  if (s == "jump") return MarkKind::Jump;
  if (s == "recovery") return MarkKind::Recovery;
  if (s == "transmission") return MarkKind::Transmission;
  throw IoError("unknown mark kind '" + s + "'");
}

MarkSet::MarkSet(double window, std::uint64_t seed, std::vector<Mark> marks)
    : window_(window), seed_(seed), marks_(std::move(marks)) {
  require(window > 0 && std::isfinite(window), "window must be finite and > 0");
  for (std::size_t i = 0; i < marks_.size(); ++i) {
    const Mark& m = marks_[i];
    require(m.time > 0 && m.time <= window_, "mark time outside (0, window]");
    if (i > 0) require(precedes(marks_[i - 1], m), "marks not in strict (time, seq) order");
  }
  std::vector<std::uint64_t> seqs;
  seqs.reserve(marks_.size());
  for (const Mark& m : marks_) seqs.push_back(m.seq);
  std::sort(seqs.begin(), seqs.end());
  require(std::adjacent_find(seqs.begin(), seqs.end()) == seqs.end(), "duplicate sequence id");
}

std::size_t MarkSet::count(MarkKind k) const {
  return static_cast<std::size_t>(std::count_if(marks_.begin(), marks_.end(), [k](const Mark& m) { return m.kind == k; }));
}

std::size_t MarkSet::upper(double t) const {
  auto it = std::upper_bound(marks_.begin(), marks_.end(), t, [](double x, const Mark& m) { return x < m.time; });
  return static_cast<std::size_t>(it - marks_.begin());
}

double expected_mark_count(const Geometry& g, const Rates& rates, double horizon, const SampleOptions& opts) {
  const double lam = opts.lambda_max.value_or(rates.lambda);
  double rate = 0;
  if (opts.jumps) rate += rates.v * static_cast<double>(g.edge_count());
  if (opts.recoveries) rate += static_cast<double>(g.site_count());
  if (opts.transmissions) rate += lam * static_cast<double>(g.directed_pair_count());
  return rate * horizon;
}

namespace {

template <class Push>
void poisson_times(std::uint64_t key, double rate, double horizon, Push&& push) {
  if (rate <= 0) return;
  Rng rng(key);
  double t = rng.exponential(rate);
  while (t <= horizon) {
    push(t, rng);
    t += rng.exponential(rate);
  }
}

}  // namespace

MarkSet sample_marks(const Geometry& g, const Rates& rates, double horizon, std::uint64_t seed,
                     const SampleOptions& opts) {
  require(std::isfinite(horizon) && horizon > 0, "horizon must be finite and > 0");
  require(std::isfinite(rates.v) && rates.v >= 0, "jump rate must be finite and >= 0");
  require(std::isfinite(rates.lambda) && rates.lambda >= 0, "transmission rate must be finite and >= 0");
  const double lam_max = opts.lambda_max.value_or(rates.lambda);
  require(std::isfinite(lam_max) && lam_max >= rates.lambda, "lambda_max must be >= lambda");

  const double expected = expected_mark_count(g, rates, horizon, opts);
  if (expected > static_cast<double>(opts.capacity)) {
    throw CapacityError("expected " + std::to_string(static_cast<std::uint64_t>(expected)) +
                        " marks exceeds capacity " + std::to_string(opts.capacity));
  }

  std::vector<Mark> marks;
  marks.reserve(static_cast<std::size_t>(expected * 1.05) + 16);
  const auto k_jump = static_cast<std::uint64_t>(Domain::JumpMark);
  const auto k_rec = static_cast<std::uint64_t>(Domain::RecoveryMark);
  const auto k_tr = static_cast<std::uint64_t>(Domain::TransmissionMark);

  if (opts.jumps) {
    for (const Edge& e : g.edges()) {
      poisson_times(stream_key(seed, k_jump, e.a, e.b), rates.v, horizon,
                    [&](double t, Rng&) { marks.push_back({t, 0, MarkKind::Jump, e.a, e.b}); });
    }
  }
  if (opts.recoveries) {
    for (SiteIndex x = 0; x < g.site_count(); ++x) {
      poisson_times(stream_key(seed, k_rec, x), 1.0, horizon,
                    [&](double t, Rng&) { marks.push_back({t, 0, MarkKind::Recovery, x, x}); });
    }
  }
  if (opts.transmissions && lam_max > 0) {
    const double keep = rates.lambda / lam_max;
    for (SiteIndex x = 0; x < g.site_count(); ++x) {
      for (SiteIndex y : g.neighbors(x)) {
        poisson_times(stream_key(seed, k_tr, x, y), lam_max, horizon, [&](double t, Rng& rng) {
          if (rng.uniform() < keep) marks.push_back({t, 0, MarkKind::Transmission, x, y});
        });
      }
    }
  }
  if (marks.size() > 2 * opts.capacity) {
    throw CapacityError("realized " + std::to_string(marks.size()) + " marks exceeds capacity " +
                        std::to_string(opts.capacity));
  }
  std::sort(marks.begin(), marks.end(), [](const Mark& x, const Mark& y) {
    if (x.time != y.time) return x.time < y.time;
    if (x.kind != y.kind) return x.kind < y.kind;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  for (std::size_t i = 0; i < marks.size(); ++i) marks[i].seq = i;
  return MarkSet(horizon, seed, std::move(marks));
}

EventStream order(const MarkSet& m) { return EventStream(m); }

void write_jsonl(std::ostream& os, const MarkSet& m, const Geometry& g) {
  nlohmann::ordered_json header;
  header["kind"] = "header";
  header["geometry"] = {{"d", g.dimension()}, {"n", g.side()}, {"boundary", to_string(g.boundary())}};
  header["window"] = m.window();
  header["seed"] = m.seed();
  header["marks"] = m.size();
  os << header.dump() << '\n';
  for (const Mark& mk : m.marks()) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(mk.kind);
    if (mk.kind == MarkKind::Recovery) {
      j["carrier"] = {mk.a};
    } else {
      j["carrier"] = {mk.a, mk.b};
    }
    j["time"] = mk.time;
    j["seq"] = mk.seq;
    os << j.dump() << '\n';
  }
  if (!os) throw IoError("failed to write mark stream");
}

MarkSet read_jsonl(std::istream& is, const Geometry& g) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty mark stream");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad mark stream header: ") + e.what());
  }
  if (header.value("kind", "") != "header") throw IoError("mark stream lacks header line");
  const auto& geo = header.at("geometry");
  if (geo.at("d").get<int>() != g.dimension() || geo.at("n").get<int>() != g.side() ||
      geo.at("boundary").get<std::string>() != to_string(g.boundary())) {
    throw IoError("mark stream geometry does not match");
  }
  const double window = header.at("window").get<double>();
  const auto seed = header.at("seed").get<std::uint64_t>();
  std::vector<Mark> marks;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Mark mk;
      mk.kind = mark_kind_from_string(j.at("kind").get<std::string>());
      const auto& c = j.at("carrier");
      mk.a = c.at(0).get<SiteIndex>();
      mk.b = mk.kind == MarkKind::Recovery ? mk.a : c.at(1).get<SiteIndex>();
      if (mk.a >= g.site_count() || mk.b >= g.site_count()) throw IoError("carrier outside geometry");
      if (mk.kind != MarkKind::Recovery && !g.adjacent(mk.a, mk.b)) throw IoError("carrier is not an edge");
      mk.time = j.at("time").get<double>();
      mk.seq = j.at("seq").get<std::uint64_t>();
      marks.push_back(mk);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(std::string("bad mark line: ") + e.what());
    }
  }
  try {
    return MarkSet(window, seed, std::move(marks));
  } catch (const DomainError& e) {
    throw IoError(std::string("invalid mark stream: ") + e.what());
  }
}

}  // namespace icpsim
