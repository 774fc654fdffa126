#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "icpsim/interchange.hpp"
#include "icpsim/lattice.hpp"
#include "icpsim/marks.hpp"

namespace icpsim {

enum class State : std::uint8_t { Empty = 0, Healthy = 1, Infected = 2 };

std::string to_string(State s);

struct Configuration {
  std::vector<State> states;

  std::size_t infected_count() const;
  std::vector<SiteIndex> infected() const;
  Occupancy occupancy() const;
  bool operator==(const Configuration&) const = default;
};

struct IcpParams {
  Geometry geometry{1, 64, Boundary::Torus};
  double lambda = 1;
  double v = 1;
  double p = 0.5;
  std::vector<SiteIndex> initial_infected{0};
};

// Sites in A infected, every other site independently Healthy with prob. p.
Configuration sample_initial(const IcpParams& params, std::uint64_t seed);
// Occupied sites become Healthy, then sites in A are set Infected.
Configuration configuration_from(const Occupancy& xi, const std::vector<SiteIndex>& infected);

enum class Engine {
  FrozenMarks,  // sample a MarkSet, then replay it
  Dynamic,      // competing exponentials over the currently active rates
  Streamed,     // the graphical representation drawn on the fly in time order
};

std::string to_string(Engine e);
Engine engine_from_string(const std::string& s);

enum class LogLevel { None, Effective };

struct RunOptions {
  LogLevel log = LogLevel::Effective;
  // Transmission marks are drawn at lambda_max and thinned (FrozenMarks and
  // Streamed), which makes runs with equal seeds nested in lambda.
  std::optional<double> lambda_max;
  bool stop_when_extinct = false;
  std::uint64_t capacity = 20'000'000;
};

enum class EventKind : std::uint8_t { Swap, Recovery, Transmission };
enum class Outcome : std::uint8_t { None, OntoEmpty, OntoHealthy, OntoInfected };

std::string to_string(EventKind k);
std::string to_string(Outcome o);

// Logged: swaps that move an infection or a particle, recoveries of infected
// sites, and every transmission attempt from an infected site.
struct Event {
  double time = 0;
  EventKind kind = EventKind::Swap;
  SiteIndex a = 0;
  SiteIndex b = 0;
  State pre_a = State::Empty, pre_b = State::Empty;
  State post_a = State::Empty, post_b = State::Empty;
  Outcome outcome = Outcome::None;
};

struct Trajectory {
  Configuration initial;
  Configuration final_state;
  std::vector<Event> events;
  double horizon = 0;
  double end_time = 0;  // horizon, or the extinction time when stopped early
  bool extinct = false;
  bool wrapped = false;  // an infection reached the torus midline
  std::uint64_t seed = 0;
  Engine engine = Engine::FrozenMarks;
};

Trajectory run(const Configuration& zeta0, const IcpParams& params, double horizon, Engine engine,
               std::uint64_t seed, const RunOptions& opts = {});

// FrozenMarks engine on a given mark set.
Trajectory run_marks(const Configuration& zeta0, const Geometry& g, const MarkSet& m, double horizon,
                     const RunOptions& opts = {});

// Effect of one mark; returns the logged event (kind Swap with no change when
// the mark does nothing).
Event apply_mark(Configuration& zeta, const Mark& mk);

// Initial configuration with the logged events applied.
Configuration replay(const Trajectory& traj, double until = std::numeric_limits<double>::infinity());

std::size_t infected_count(const Configuration& zeta);

// Containment flow: swaps permute, recoveries are ignored, a transmission
// (w,z) adds z when w is contained.
class ContainmentFlow {
 public:
  ContainmentFlow(const Geometry& g, const std::vector<SiteIndex>& seed_set);
  void apply(const Mark& mk);
  bool contains(SiteIndex x) const { return in_[x] != 0; }
  std::size_t size() const { return size_; }
  // Undirected adjacent pairs with both ends contained.
  std::size_t adjacent_pairs() const { return pairs_; }
  bool wrapped() const { return wrapped_; }
  std::vector<SiteIndex> sites() const;

 private:
  std::size_t contained_neighbors(SiteIndex x) const;
  const Geometry* g_;
  std::vector<std::uint8_t> in_;
  std::vector<std::uint8_t> midline_;
  std::size_t size_ = 0;
  std::size_t pairs_ = 0;
  bool wrapped_ = false;
};

std::vector<SiteIndex> containment(const Geometry& g, const MarkSet& m, const std::vector<SiteIndex>& A, double s,
                                   double t, bool* wrapped = nullptr);

// Counting version of the containment flow started from the origin:
// swaps permute, a transmission (w,z) adds kappa(w) to kappa(z). Saturates.
class KappaField {
 public:
  explicit KappaField(const Geometry& g);
  void apply(const Mark& mk);
  std::uint64_t at(SiteIndex x) const { return k_[x]; }
  const std::vector<std::uint64_t>& values() const { return k_; }

 private:
  std::vector<std::uint64_t> k_;
};

std::vector<std::uint64_t> kappa(const Geometry& g, const MarkSet& m, double t);

struct CollisionStats {
  std::size_t contained = 0;  // |Psi_h|
  double pair_time = 0;       // integral over [0,h] of adjacent contained pairs
  double first_collision = std::numeric_limits<double>::infinity();
  bool wrapped = false;
};

CollisionStats collision_stats(const Geometry& g, const MarkSet& m, const std::vector<SiteIndex>& A, double h);

struct SpaceTimeBox {
  SiteIndex center = 0;
  int ell = 1;
  double t0 = 0;
  double h = 1;
};

enum class CrossingKind { None, Temporal, Spatial };

struct HalfCrossing {
  CrossingKind kind = CrossingKind::None;
  int axis = -1;   // spatial only
  int side = 0;    // +1 / -1 half of the box along the axis
  bool outward = false;  // from the center face to the outer face
};

// Detects infection paths (paths of infected particles following the flow and
// transmission marks, avoiding recovery marks) confined to the box. Temporal
// is checked first, then axes in order.
HalfCrossing half_crossing(const Geometry& g, const Trajectory& traj, const SpaceTimeBox& box);

struct XiThresholds {
  double p0 = 0.5;
  std::optional<int> L0;          // default floor(sqrt(v) log^4 v)
  std::optional<int> box_radius;  // default floor(v^(1/10))
  std::optional<double> infection_cap;  // default log^3 v
};

struct XiFlags {
  bool dens = false;
  bool dist = false;
  bool inf = false;
  int L0 = 0;
  int box_radius = 0;
};

XiFlags xi_classify(const Geometry& g, const Configuration& zeta, double v, const XiThresholds& th);

// p + 0.05 (1/(2 d lambda) - p), the default density threshold.
double default_p0(int d, double p, double lambda);
double default_p1(int d, double p, double lambda);

struct SigmaEpoch {
  double time = 0;
  std::size_t infected = 0;  // after the epoch
  int increment = 0;         // -1, 0 or +1
};

// Epochs at which an infected site meets a recovery mark or emits a
// transmission mark.
std::vector<SigmaEpoch> sigma_chain(const Trajectory& traj);

}  // namespace icpsim
