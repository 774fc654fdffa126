#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace icpsim {

enum class Boundary { Torus, HardWall };

using SiteIndex = std::uint32_t;

struct Site {
  std::vector<int> coords;
  auto operator<=>(const Site&) const = default;
};

struct Edge {
  SiteIndex a;
  SiteIndex b;
  auto operator<=>(const Edge&) const = default;
};

// Box {0..n-1}^d, either periodic or with hard walls. Sites are addressed by a
// dense index (first coordinate fastest); neighbor lists are stored in CSR
// form so that slot k of site x is the directed pair (x, neighbor k).
class Geometry {
 public:
  Geometry(int d, int n, Boundary boundary);

  int dimension() const { return d_; }
  int side() const { return n_; }
  Boundary boundary() const { return boundary_; }
  std::size_t site_count() const { return site_count_; }

  bool contains(const Site& x) const;
  SiteIndex index(const Site& x) const;
  Site site(SiteIndex i) const;
  int coord(SiteIndex i, int axis) const;

  std::span<const SiteIndex> neighbors(SiteIndex x) const {
    return {nbr_.data() + offset_[x], nbr_.data() + offset_[x + 1]};
  }
  std::size_t degree(SiteIndex x) const { return offset_[x + 1] - offset_[x]; }
  std::size_t pair_offset(SiteIndex x) const { return offset_[x]; }
  std::size_t directed_pair_count() const { return nbr_.size(); }
  std::pair<SiteIndex, SiteIndex> directed_pair(std::size_t k) const;
  bool adjacent(SiteIndex x, SiteIndex y) const;

  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  // Signed per-axis displacement from a to b; the shortest one on the torus.
  int axis_delta(int a, int b) const;
  // l-infinity distance (periodic on the torus).
  int distance(SiteIndex x, SiteIndex y) const;
  int norm(SiteIndex x) const { return distance(x, origin()); }
  SiteIndex origin() const { return 0; }

  // x + offset, wrapping on the torus; throws DomainError off a hard wall.
  SiteIndex translate(SiteIndex x, std::span<const int> offset) const;
  // Single step along an axis; false when it leaves a hard-walled box.
  bool step(SiteIndex x, int axis, int sign, SiteIndex& out) const;

  // Some coordinate sits at periodic distance floor(n/2) from the origin.
  bool on_midline(SiteIndex x) const;

  std::string describe() const;

 private:
  int d_;
  int n_;
  Boundary boundary_;
  std::size_t site_count_;
  std::vector<std::size_t> stride_;
  std::vector<std::size_t> offset_;
  std::vector<SiteIndex> nbr_;
  std::vector<Edge> edges_;
};

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

std::vector<Site> neighbors(const Geometry& g, const Site& x);
// Closed l-infinity ball; DomainError if it would not fit without aliasing.
std::vector<Site> ball(const Geometry& g, const Site& center, int r);
std::vector<Site> boundary(const Geometry& g, const Site& center, int r);

std::vector<SiteIndex> ball_indices(const Geometry& g, SiteIndex center, int r);
std::vector<SiteIndex> boundary_indices(const Geometry& g, SiteIndex center, int r);
// Membership mask of ball_indices, sized site_count.
std::vector<std::uint8_t> ball_mask(const Geometry& g, SiteIndex center, int r);

}  // namespace icpsim
