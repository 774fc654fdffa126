#include "icpsim/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "icpsim/errors.hpp"

namespace icpsim {

Geometry::Geometry(int d, int n, Boundary boundary) : d_(d), n_(n), boundary_(boundary) {
  require(d >= 1, "dimension must be >= 1");
  require(n >= 3, "side must be >= 3");
  std::size_t count = 1;
  stride_.resize(d);
  for (int k = 0; k < d; ++k) {
    stride_[k] = count;
    require(count <= (std::size_t{1} << 31) / static_cast<std::size_t>(n), "geometry too large");
    count *= static_cast<std::size_t>(n);
  }
  site_count_ = count;

  offset_.assign(count + 1, 0);
  nbr_.reserve(count * 2 * d);
  for (std::size_t x = 0; x < count; ++x) {
    offset_[x] = nbr_.size();
    for (int k = 0; k < d; ++k) {
      for (int sign : {-1, +1}) {
        SiteIndex y;
        if (step(static_cast<SiteIndex>(x), k, sign, y)) nbr_.push_back(y);
      }
    }
  }
  offset_[count] = nbr_.size();

  for (std::size_t x = 0; x < count; ++x) {
    for (int k = 0; k < d; ++k) {
      SiteIndex y;
      if (step(static_cast<SiteIndex>(x), k, +1, y)) {
        edges_.push_back({static_cast<SiteIndex>(x), y});
      }
    }
  }
}

bool Geometry::contains(const Site& x) const {
  if (static_cast<int>(x.coords.size()) != d_) return false;
  return std::all_of(x.coords.begin(), x.coords.end(), [&](int c) { return c >= 0 && c < n_; });
}

SiteIndex Geometry::index(const Site& x) const {
  require(static_cast<int>(x.coords.size()) == d_, "site has wrong dimension");
  std::size_t i = 0;
  for (int k = 0; k < d_; ++k) {
    int c = x.coords[k];
    if (boundary_ == Boundary::Torus) {
      c %= n_;
      if (c < 0) c += n_;
    } else {
      require(c >= 0 && c < n_, "site outside hard-walled box");
    }
    i += static_cast<std::size_t>(c) * stride_[k];
  }
  return static_cast<SiteIndex>(i);
}

Site Geometry::site(SiteIndex i) const {
  Site s;
  s.coords.resize(d_);
  for (int k = 0; k < d_; ++k) s.coords[k] = coord(i, k);
  return s;
}

int Geometry::coord(SiteIndex i, int axis) const {
  return static_cast<int>((i / stride_[axis]) % static_cast<std::size_t>(n_));
}

std::pair<SiteIndex, SiteIndex> Geometry::directed_pair(std::size_t k) const {
  auto it = std::upper_bound(offset_.begin(), offset_.end(), k);
  auto x = static_cast<SiteIndex>(std::distance(offset_.begin(), it) - 1);
  return {x, nbr_[k]};
}

bool Geometry::adjacent(SiteIndex x, SiteIndex y) const {
  for (SiteIndex z : neighbors(x)) {
    if (z == y) return true;
  }
  return false;
}

int Geometry::axis_delta(int a, int b) const {
  int delta = b - a;
  if (boundary_ == Boundary::Torus) {
    delta %= n_;
    if (delta < 0) delta += n_;
    if (delta > n_ / 2) delta -= n_;
  }
  return delta;
}

int Geometry::distance(SiteIndex x, SiteIndex y) const {
  int best = 0;
  for (int k = 0; k < d_; ++k) best = std::max(best, std::abs(axis_delta(coord(x, k), coord(y, k))));
  return best;
}

SiteIndex Geometry::translate(SiteIndex x, std::span<const int> offset) const {
  require(static_cast<int>(offset.size()) == d_, "offset has wrong dimension");
  Site s = site(x);
  for (int k = 0; k < d_; ++k) s.coords[k] += offset[k];
  return index(s);
}

bool Geometry::step(SiteIndex x, int axis, int sign, SiteIndex& out) const {
  int c = coord(x, axis);
  int c2 = c + sign;
  if (c2 < 0 || c2 >= n_) {
    if (boundary_ == Boundary::HardWall) return false;
    c2 = (c2 + n_) % n_;
  }
  out = static_cast<SiteIndex>(static_cast<std::int64_t>(x) +
                               static_cast<std::int64_t>(c2 - c) * static_cast<std::int64_t>(stride_[axis]));
  return true;
}

bool Geometry::on_midline(SiteIndex x) const {
  for (int k = 0; k < d_; ++k) {
    if (std::abs(axis_delta(0, coord(x, k))) >= n_ / 2) return true;
  }
  return false;
}

std::string Geometry::describe() const {
  std::ostringstream os;
  os << "d=" << d_ << " n=" << n_ << " boundary=" << to_string(boundary_);
  return os.str();
}

std::string to_string(Boundary b) { return b == Boundary::Torus ? "torus" : "hardwall"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "torus") return Boundary::Torus;
  if (s == "hardwall") return Boundary::HardWall;
  throw DomainError("unknown boundary '" + s + "'");
}

std::vector<Site> neighbors(const Geometry& g, const Site& x) {
  require(g.contains(x), "site outside the geometry");
  std::vector<Site> out;
  for (SiteIndex y : g.neighbors(g.index(x))) out.push_back(g.site(y));
  return out;
}

namespace {

void check_ball(const Geometry& g, SiteIndex center, int r) {
  require(r >= 0, "radius must be >= 0");
  if (g.boundary() == Boundary::Torus) {
    if (2 * r + 1 > g.side()) {
      throw DomainError("ball of radius " + std::to_string(r) + " needs side >= " +
                        std::to_string(2 * r + 1) + ", have " + std::to_string(g.side()));
    }
  } else {
    for (int k = 0; k < g.dimension(); ++k) {
      int c = g.coord(center, k);
      if (c - r < 0 || c + r >= g.side()) {
        throw DomainError("ball of radius " + std::to_string(r) + " leaves the hard-walled box");
      }
    }
  }
}

// Visits every offset in [-r,r]^d; the callback receives the offset vector.
template <class F>
void for_each_offset(int d, int r, F&& f) {
  std::vector<int> off(d, -r);
  while (true) {
    f(off);
    int k = 0;
    while (k < d && off[k] == r) off[k++] = -r;
    if (k == d) return;
    ++off[k];
  }
}

}  // namespace

std::vector<SiteIndex> ball_indices(const Geometry& g, SiteIndex center, int r) {
  check_ball(g, center, r);
  std::vector<SiteIndex> out;
  for_each_offset(g.dimension(), r, [&](const std::vector<int>& off) { out.push_back(g.translate(center, off)); });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SiteIndex> boundary_indices(const Geometry& g, SiteIndex center, int r) {
  check_ball(g, center, r);
  std::vector<SiteIndex> out;
  for_each_offset(g.dimension(), r, [&](const std::vector<int>& off) {
    int m = 0;
    for (int c : off) m = std::max(m, std::abs(c));
    if (m == r) out.push_back(g.translate(center, off));
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint8_t> ball_mask(const Geometry& g, SiteIndex center, int r) {
  std::vector<std::uint8_t> mask(g.site_count(), 0);
  for (SiteIndex x : ball_indices(g, center, r)) mask[x] = 1;
  return mask;
}

std::vector<Site> ball(const Geometry& g, const Site& center, int r) {
  require(g.contains(center), "center outside the geometry");
  std::vector<Site> out;
  for (SiteIndex x : ball_indices(g, g.index(center), r)) out.push_back(g.site(x));
  return out;
}

std::vector<Site> boundary(const Geometry& g, const Site& center, int r) {
  require(g.contains(center), "center outside the geometry");
  std::vector<Site> out;
  for (SiteIndex x : boundary_indices(g, g.index(center), r)) out.push_back(g.site(x));
  return out;
}

}  // namespace icpsim
