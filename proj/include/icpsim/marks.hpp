#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icpsim/lattice.hpp"

namespace icpsim {

// Jump rate per edge and transmission rate per directed pair. Recovery is 1.
struct Rates {
  double v = 1;
  double lambda = 0;
};

enum class MarkKind : std::uint8_t { Jump = 0, Recovery = 1, Transmission = 2 };

std::string to_string(MarkKind k);
MarkKind mark_kind_from_string(const std::string& s);

// Jump: edge {a,b}. Recovery: site a (b == a). Transmission: a -> b.
struct Mark {
  double time = 0;
  std::uint64_t seq = 0;
  MarkKind kind = MarkKind::Jump;
  SiteIndex a = 0;
  SiteIndex b = 0;

  bool operator==(const Mark&) const = default;
};

// Strict global order on marks.
inline bool precedes(const Mark& x, const Mark& y) {
  return x.time < y.time || (x.time == y.time && x.seq < y.seq);
}

struct SampleOptions {
  bool jumps = true;
  bool recoveries = true;
  bool transmissions = true;
  // Transmissions are drawn at this rate and thinned to rates.lambda; runs that
  // share (seed, v, lambda_max) therefore share marks and nest in lambda.
  std::optional<double> lambda_max;
  std::uint64_t capacity = 20'000'000;
};

// A realized graphical representation on [0, window], sorted by (time, seq).
class MarkSet {
 public:
  MarkSet() = default;
  // Validates ordering and uniqueness of sequence ids.
  MarkSet(double window, std::uint64_t seed, std::vector<Mark> marks);

  double window() const { return window_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Mark>& marks() const { return marks_; }
  std::size_t size() const { return marks_.size(); }
  std::size_t count(MarkKind k) const;

  // Index of the first mark with time > t.
  std::size_t upper(double t) const;

 private:
  double window_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Mark> marks_;
};

// Each carrier (edge, site, directed pair) owns a stream keyed by
// (seed, kind, carrier), so the realization does not depend on traversal order.
MarkSet sample_marks(const Geometry& g, const Rates& rates, double horizon, std::uint64_t seed,
                     const SampleOptions& opts = {});

// Expected number of marks sample_marks would produce.
double expected_mark_count(const Geometry& g, const Rates& rates, double horizon, const SampleOptions& opts);

class EventStream {
 public:
  explicit EventStream(const MarkSet& m) : marks_(m.marks()) {}
  auto begin() const { return marks_.begin(); }
  auto end() const { return marks_.end(); }
  std::size_t size() const { return marks_.size(); }

 private:
  std::span<const Mark> marks_;
};

EventStream order(const MarkSet& m);

// JSON lines: one header line, then one mark per line.
void write_jsonl(std::ostream& os, const MarkSet& m, const Geometry& g);
MarkSet read_jsonl(std::istream& is, const Geometry& g);

}  // namespace icpsim
