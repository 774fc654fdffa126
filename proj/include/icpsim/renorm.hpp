#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icpsim/icp.hpp"
#include "icpsim/lattice.hpp"
#include "icpsim/stats.hpp"

namespace icpsim {

struct SurvScaleRow {
  int N = 0;
  double rho = 1;              // sum_{i<=N} 2^-i
  long double length = 0;      // alpha^(N^2) * floor(sqrt v)
  long double side = 0;        // half-side of the spatial box
  long double h_prime = 0;     // rho_N alpha^(N^2) h0
  long double h = 0;           // floor(h'_N / h_{N-1}) h_{N-1}
  std::int64_t h_ratio = 1;    // h_N / h_{N-1} (1 at N = 0)
  long double delta = 0;       // alpha^(-8(N+2))
  bool sandwich = true;        // (1 - alpha^(1-2N)) h'_N <= h_N <= h'_N
};

struct SurvScaleTable {
  double v = 0;
  double eps0 = 0;
  double h0 = 1;
  std::int64_t alpha = 1;
  bool degenerate = false;  // alpha < 2
  std::int64_t length0 = 0;
  std::vector<SurvScaleRow> rows;
};

// alpha = floor(v^(eps0/64)) unless overridden.
SurvScaleTable surv_scales(double v, double eps0, double h0, int n_max, std::optional<std::int64_t> alpha = {});

struct ExtScaleRow {
  int N = 0;
  long double length = 0;  // 128^N sqrt(v) log^4 v
  long double time = 0;    // 128^N 2 log^3 v
  long double delta = 0;   // (255^(2d) (4d+2))^(-N-1)
};

struct ExtScaleTable {
  double v = 0;
  int d = 1;
  std::vector<ExtScaleRow> rows;
};

ExtScaleTable ext_scales(double v, int d, int n_max);

struct IndexRange {
  std::int64_t l = 0, r = 0, b = 0, t = 0;
  bool operator==(const IndexRange&) const = default;
};

// Scale-(N-1) indices whose boxes sit inside the scale-N box (m, n).
IndexRange index_ranges(const SurvScaleTable& tbl, int N, std::int64_t m, std::int64_t n);

// Rectangle of (m, n) values with a 0/1 value and a "defined" flag per point.
struct GridField {
  std::int64_t m_min = 0, m_max = -1, n_min = 0, n_max = -1;
  std::vector<std::uint8_t> value;
  std::vector<std::uint8_t> defined;

  GridField() = default;
  GridField(std::int64_t m0, std::int64_t m1, std::int64_t n0, std::int64_t n1, std::uint8_t fill = 0);
  bool contains(std::int64_t m, std::int64_t n) const {
    return m >= m_min && m <= m_max && n >= n_min && n <= n_max;
  }
  std::size_t slot(std::int64_t m, std::int64_t n) const {
    return static_cast<std::size_t>((n - n_min) * (m_max - m_min + 1) + (m - m_min));
  }
  bool at(std::int64_t m, std::int64_t n) const { return value[slot(m, n)] != 0; }
  bool is_defined(std::int64_t m, std::int64_t n) const { return contains(m, n) && defined[slot(m, n)] != 0; }
  void set(std::int64_t m, std::int64_t n, bool v) {
    value[slot(m, n)] = v;
    defined[slot(m, n)] = 1;
  }
};

enum class Tri { Good, Bad, Indeterminate };
const char* to_string(Tri t);

struct Bad0Context {
  Geometry geometry{1, 512, Boundary::Torus};
  Configuration at_epoch;       // zeta at time n h0
  Configuration at_next_epoch;  // zeta at time (n+1) h0
  double v = 16;
  double eps0 = 1.0 / 32;
  double p_low = 0.5;  // lower density level
  double p0 = 0.55;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct Bad0Result {
  Tri b1 = Tri::Good;
  bool b2 = false;
  Tri overall = Tri::Good;  // Indeterminate is treated as bad by callers
  Estimate g;
  double threshold = 0;
};

// Scale-0 badness of the box at column m (spatial offset floor(sqrt v) m on
// the first axis). B1 is decided from a Monte Carlo interval for the density
// drop probability; B2 is exact from the two configurations.
Bad0Result classify_bad0(const Bad0Context& ctx, std::int64_t m, std::uint64_t g_budget);

// N-bad iff two (N-1)-bad points of the index rectangle are more than one row
// apart, or within one row but more than sqrt(alpha) columns apart. Output
// covers `rect` (default: every point whose rectangle lies in the input).
GridField classify_badN(const GridField& bad, const SurvScaleTable& tbl, int N,
                        std::optional<GridField> rect = std::nullopt);

// Scale-N accessibility computed from the scale-0 bad field.
GridField accessible(const GridField& bad0, const SurvScaleTable& tbl, int N);

struct SpreadReport {
  std::uint64_t instances = 0;   // (m, n, m') triples with everything defined
  std::uint64_t hypothesis = 0;  // accessible at (m,n) and N-good at (m',n+1)
  std::uint64_t violations = 0;  // ... yet (m',n+1) not accessible
};

SpreadReport spread_check(const GridField& bad0, const SurvScaleTable& tbl, int N);

std::string to_csv(const SurvScaleTable& t);
std::string to_json(const SurvScaleTable& t);
std::string to_csv(const ExtScaleTable& t);
std::string to_json(const ExtScaleTable& t);

}  // namespace icpsim
