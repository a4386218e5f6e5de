#pragma once

// Growing lattice clusters with an incrementally maintained edge boundary.
//
// The boundary is a flat array of directed edges (member -> non-member).
// Each member cell records, per direction, the array slot of its outgoing
// boundary edge, so removing every edge that points at a newly added vertex
// and swap-removing from the array are both O(1). Sampling a uniform array
// slot is the same as picking a boundary vertex with probability
// proportional to its number of member neighbors.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fpp/errors.hpp"
#include "fpp/lattice.hpp"
#include "fpp/rng.hpp"

namespace fpp {

inline constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();

struct CellState {
  std::array<std::uint32_t, 4> slot = {kNoSlot, kNoSlot, kNoSlot, kNoSlot};
  bool member = false;
};

struct DirectedEdge {
  Vertex from;
  Direction dir = Direction::east;

  Vertex head() const noexcept { return step(from, dir); }

  friend constexpr bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
  friend constexpr auto operator<=>(const DirectedEdge&, const DirectedEdge&) = default;
};

/// Cell storage backed by a hash map; unbounded and sparse.
class HashCellStore {
 public:
  const CellState* find(Vertex v) const noexcept {
    auto it = cells_.find(v);
    return it == cells_.end() ? nullptr : &it->second;
  }
  CellState* find(Vertex v) noexcept {
    auto it = cells_.find(v);
    return it == cells_.end() ? nullptr : &it->second;
  }
  CellState& get(Vertex v) { return cells_[v]; }

 private:
  std::unordered_map<Vertex, CellState, VertexHash> cells_;
};

/// Dense row-major cell storage that re-allocates to a larger box whenever a
/// vertex outside the current box is requested.
class GridCellStore {
 public:
  GridCellStore() = default;

  /// Pre-sizes the grid to the inclusive box [x0,x1] x [y0,y1].
  GridCellStore(std::int32_t x0, std::int32_t y0, std::int32_t x1, std::int32_t y1) {
    reshape(x0, y0, x1, y1);
  }

  const CellState* find(Vertex v) const noexcept {
    return inside(v) ? &cells_[index(v)] : nullptr;
  }
  CellState* find(Vertex v) noexcept { return inside(v) ? &cells_[index(v)] : nullptr; }

  CellState& get(Vertex v) {
    if (!inside(v)) {
      grow_to(v);
    }
    return cells_[index(v)];
  }

  std::size_t capacity() const noexcept { return cells_.size(); }

 private:
  bool inside(Vertex v) const noexcept {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(v.x) - x0_) < width_ &&
           static_cast<std::uint64_t>(static_cast<std::int64_t>(v.y) - y0_) < height_;
  }

  std::size_t index(Vertex v) const noexcept {
    return static_cast<std::size_t>(static_cast<std::int64_t>(v.y) - y0_) * width_ +
           static_cast<std::size_t>(static_cast<std::int64_t>(v.x) - x0_);
  }

  void grow_to(Vertex v) {
    if (cells_.empty()) {
      constexpr std::int64_t margin = 32;
      reshape(v.x - margin, v.y - margin, v.x + margin, v.y + margin);
      return;
    }
    const std::int64_t margin_x = std::max<std::int64_t>(32, static_cast<std::int64_t>(width_) / 2);
    const std::int64_t margin_y = std::max<std::int64_t>(32, static_cast<std::int64_t>(height_) / 2);
    std::int64_t nx0 = x0_;
    std::int64_t ny0 = y0_;
    std::int64_t nx1 = x0_ + static_cast<std::int64_t>(width_) - 1;
    std::int64_t ny1 = y0_ + static_cast<std::int64_t>(height_) - 1;
    if (v.x < nx0) nx0 = v.x - margin_x;
    if (v.x > nx1) nx1 = v.x + margin_x;
    if (v.y < ny0) ny0 = v.y - margin_y;
    if (v.y > ny1) ny1 = v.y + margin_y;
    reshape(nx0, ny0, nx1, ny1);
  }

  void reshape(std::int64_t nx0, std::int64_t ny0, std::int64_t nx1, std::int64_t ny1) {
    constexpr std::int64_t lo = std::numeric_limits<std::int32_t>::min();
    constexpr std::int64_t hi = std::numeric_limits<std::int32_t>::max();
    if (nx0 < lo || ny0 < lo || nx1 > hi || ny1 > hi || nx1 < nx0 || ny1 < ny0) {
      throw RangeError("GridCellStore: box outside the coordinate range");
    }
    const auto new_w = static_cast<std::size_t>(nx1 - nx0 + 1);
    const auto new_h = static_cast<std::size_t>(ny1 - ny0 + 1);
    std::vector<CellState> next(new_w * new_h);
    for (std::size_t row = 0; row < height_; ++row) {
      const std::int64_t y = y0_ + static_cast<std::int64_t>(row);
      const auto dst = static_cast<std::size_t>(y - ny0) * new_w + static_cast<std::size_t>(x0_ - nx0);
      std::copy_n(cells_.begin() + static_cast<std::ptrdiff_t>(row * width_), width_,
                  next.begin() + static_cast<std::ptrdiff_t>(dst));
    }
    cells_ = std::move(next);
    x0_ = nx0;
    y0_ = ny0;
    width_ = new_w;
    height_ = new_h;
  }

  std::vector<CellState> cells_;
  std::int64_t x0_ = 0;
  std::int64_t y0_ = 0;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
};

template <class Store, class Region = WholeLattice>
class BasicCluster {
 public:
  BasicCluster() = default;
  explicit BasicCluster(Region region, Store store = {})
      : region_(std::move(region)), store_(std::move(store)) {}

  const Region& region() const noexcept { return region_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  std::span<const Vertex> members() const noexcept { return members_; }

  bool contains(Vertex v) const noexcept {
    const CellState* c = store_.find(v);
    return c != nullptr && c->member;
  }

  /// Y: number of directed edges from the cluster to admissible non-members.
  std::size_t boundary_count() const noexcept { return boundary_.size(); }
  std::span<const DirectedEdge> boundary() const noexcept { return boundary_; }
  const DirectedEdge& boundary_edge(std::size_t i) const noexcept { return boundary_[i]; }

  /// Adds w, drops the edges pointing into it and opens edges from w to its
  /// admissible non-member neighbors.
  void add_vertex(Vertex w) {
    if (contains(w)) {
      throw LogicError("add_vertex: " + to_string(w) + " is already a member");
    }
    for (Direction d : kDirections) {
      const Vertex u = step(w, d);
      CellState* cu = store_.find(u);
      if (cu != nullptr && cu->member) {
        const std::uint32_t s = cu->slot[static_cast<unsigned>(opposite(d))];
        if (s != kNoSlot) {
          swap_remove(s);
        }
      }
    }
    CellState& cw = store_.get(w);
    cw.member = true;
    for (Direction d : kDirections) {
      const Vertex u = step(w, d);
      const CellState* cu = store_.find(u);
      if ((cu == nullptr || !cu->member) && region_.contains(u)) {
        cw.slot[static_cast<unsigned>(d)] = static_cast<std::uint32_t>(boundary_.size());
        boundary_.push_back({w, d});
      }
    }
    members_.push_back(w);
  }

  /// Head of a uniformly chosen boundary edge.
  Vertex sample_boundary_head(RngStream& rng) const noexcept {
    return boundary_[rng.uniform_index(boundary_.size())].head();
  }

  /// Boundary rebuilt from scratch by scanning every member's neighbors; sorted.
  std::vector<DirectedEdge> recompute_boundary() const {
    std::vector<DirectedEdge> out;
    for (Vertex m : members_) {
      for (Direction d : kDirections) {
        const Vertex u = step(m, d);
        if (!contains(u) && region_.contains(u)) {
          out.push_back({m, d});
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// The incrementally maintained boundary, sorted for comparison.
  std::vector<DirectedEdge> sorted_boundary() const {
    std::vector<DirectedEdge> out(boundary_.begin(), boundary_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<Vertex> sorted_boundary_heads() const {
    std::vector<Vertex> out;
    out.reserve(boundary_.size());
    for (const DirectedEdge& e : boundary_) out.push_back(e.head());
    std::sort(out.begin(), out.end());
    return out;
  }

  /// True when every member's slot table agrees with the edge array.
  bool slots_consistent() const {
    std::size_t referenced = 0;
    for (Vertex m : members_) {
      const CellState* c = store_.find(m);
      if (c == nullptr) return false;
      for (Direction d : kDirections) {
        const std::uint32_t s = c->slot[static_cast<unsigned>(d)];
        if (s == kNoSlot) continue;
        if (s >= boundary_.size() || !(boundary_[s] == DirectedEdge{m, d})) return false;
        ++referenced;
      }
    }
    return referenced == boundary_.size();
  }

 private:
  void swap_remove(std::uint32_t s) {
    const DirectedEdge removed = boundary_[s];
    store_.find(removed.from)->slot[static_cast<unsigned>(removed.dir)] = kNoSlot;
    const auto last = static_cast<std::uint32_t>(boundary_.size() - 1);
    if (s != last) {
      const DirectedEdge moved = boundary_[last];
      boundary_[s] = moved;
      store_.find(moved.from)->slot[static_cast<unsigned>(moved.dir)] = s;
    }
    boundary_.pop_back();
  }

  Region region_{};
  Store store_{};
  std::vector<Vertex> members_;
  std::vector<DirectedEdge> boundary_;
};

/// Growable dense bitmap of lattice vertices. Every set vertex keeps its
/// four neighbors inside the allocated box, so neighbor lookups from a
/// member can use the unchecked index form.
class BitGrid {
 public:
  bool test(Vertex v) const noexcept { return interior(v) && test_index(index(v)); }

  bool test_index(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63U)) & 1U; }
  void set_index(std::size_t i) noexcept { words_[i >> 6] |= std::uint64_t{1} << (i & 63U); }

  std::size_t index(Vertex v) const noexcept {
    return static_cast<std::size_t>(static_cast<std::int64_t>(v.y) - y0_) * width_ +
           static_cast<std::size_t>(static_cast<std::int64_t>(v.x) - x0_);
  }

  /// Index offsets of the E, N, W, S neighbors.
  std::array<std::ptrdiff_t, 4> offsets() const noexcept {
    const auto w = static_cast<std::ptrdiff_t>(width_);
    return {1, w, -1, -w};
  }

  /// Strictly inside, leaving a one-cell frame.
  bool interior(Vertex v) const noexcept {
    return width_ > 2 && height_ > 2 &&
           static_cast<std::uint64_t>(static_cast<std::int64_t>(v.x) - x0_ - 1) < width_ - 2 &&
           static_cast<std::uint64_t>(static_cast<std::int64_t>(v.y) - y0_ - 1) < height_ - 2;
  }

  void grow_to(Vertex v) {
    if (interior(v)) return;
    std::int64_t nx0 = v.x;
    std::int64_t ny0 = v.y;
    std::int64_t nx1 = v.x;
    std::int64_t ny1 = v.y;
    if (width_ > 0) {
      nx0 = std::min<std::int64_t>(nx0, x0_);
      ny0 = std::min<std::int64_t>(ny0, y0_);
      nx1 = std::max<std::int64_t>(nx1, x0_ + static_cast<std::int64_t>(width_) - 1);
      ny1 = std::max<std::int64_t>(ny1, y0_ + static_cast<std::int64_t>(height_) - 1);
    }
    const std::int64_t margin =
        std::max<std::int64_t>(64, static_cast<std::int64_t>(std::max(width_, height_)) / 2);
    nx0 -= margin;
    ny0 -= margin;
    nx1 += margin;
    ny1 += margin;
    constexpr std::int64_t lo = std::numeric_limits<std::int32_t>::min();
    constexpr std::int64_t hi = std::numeric_limits<std::int32_t>::max();
    if (nx0 < lo || ny0 < lo || nx1 > hi || ny1 > hi) {
      throw RangeError("BitGrid: box outside the coordinate range");
    }
    const auto new_w = static_cast<std::size_t>(nx1 - nx0 + 1);
    const auto new_h = static_cast<std::size_t>(ny1 - ny0 + 1);
    // Cell indices are stored as 32-bit values by the frontier cluster.
    if (new_w * new_h > std::numeric_limits<std::uint32_t>::max()) {
      throw RangeError("BitGrid: more than 2^32 cells requested");
    }
    std::vector<std::uint64_t> next((new_w * new_h + 63) / 64, 0);
    for (std::size_t row = 0; row < height_; ++row) {
      for (std::size_t col = 0; col < width_; ++col) {
        if (!test_index(row * width_ + col)) continue;
        const auto nrow = static_cast<std::size_t>(y0_ + static_cast<std::int64_t>(row) - ny0);
        const auto ncol = static_cast<std::size_t>(x0_ + static_cast<std::int64_t>(col) - nx0);
        const std::size_t j = nrow * new_w + ncol;
        next[j >> 6] |= std::uint64_t{1} << (j & 63U);
      }
    }
    words_ = std::move(next);
    x0_ = nx0;
    y0_ = ny0;
    width_ = new_w;
    height_ = new_h;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::int64_t x0_ = 0;
  std::int64_t y0_ = 0;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
};

/// Cluster with an exact boundary count but lazily deleted boundary edges.
///
/// Edges whose head has since joined the cluster stay in the array until a
/// sample lands on them, at which point they are swap-removed and the draw
/// is repeated. Rejection keeps the accepted head uniform over live edges;
/// each edge is removed at most once, so sampling is amortized O(1). The
/// count Y is kept exactly: adding w with k member neighbors and a
/// admissible free neighbors changes Y by a - k.
template <class Region = WholeLattice>
class BasicFrontierCluster {
 public:
  BasicFrontierCluster() = default;
  explicit BasicFrontierCluster(Region region) : region_(std::move(region)) {}

  const Region& region() const noexcept { return region_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  std::span<const Vertex> members() const noexcept { return members_; }
  bool contains(Vertex v) const noexcept { return grid_.test(v); }
  std::size_t boundary_count() const noexcept { return live_; }

  void add_vertex(Vertex w) {
    if (!grid_.interior(w)) {
      grid_.grow_to(w);
      for (Slot& e : edges_) e.index = static_cast<std::uint32_t>(grid_.index(e.head));
    }
    add_at(grid_.index(w), w);
  }

  Vertex sample_boundary_head(RngStream& rng) { return edges_[sample_slot(rng)].head; }

  /// Samples a uniform live boundary edge and adds its head in one pass.
  Vertex grow_once(RngStream& rng) {
    const Slot e = edges_[sample_slot(rng)];
    if (grid_.interior(e.head)) {
      add_at(e.index, e.head);
    } else {
      add_vertex(e.head);
    }
    return e.head;
  }

  std::vector<DirectedEdge> recompute_boundary() const {
    std::vector<DirectedEdge> out;
    for (Vertex m : members_) {
      for (Direction d : kDirections) {
        const Vertex u = step(m, d);
        if (!contains(u) && region_.contains(u)) out.push_back({m, d});
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Heads of the live edges in the lazily maintained array, sorted (with
  /// multiplicity: a vertex appears once per member neighbor).
  std::vector<Vertex> sorted_boundary_heads() const {
    std::vector<Vertex> out;
    for (const Slot& e : edges_) {
      if (!contains(e.head)) out.push_back(e.head);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Slot {
    Vertex head;
    std::uint32_t index;  // grid index of head, refreshed when the grid grows
  };

  std::size_t sample_slot(RngStream& rng) {
    for (;;) {
      const auto s = static_cast<std::size_t>(rng.uniform_index(edges_.size()));
      // A stored head neighbors a member, so it lies inside the grid.
      if (!grid_.test_index(edges_[s].index)) return s;
      edges_[s] = edges_.back();
      edges_.pop_back();
    }
  }

  void add_at(std::size_t i, Vertex w) {
    if (grid_.test_index(i)) {
      throw LogicError("add_vertex: " + to_string(w) + " is already a member");
    }
    const auto off = grid_.offsets();
    std::size_t member_neighbors = 0;
    std::size_t opened = 0;
    for (Direction d : kDirections) {
      const auto k = static_cast<unsigned>(d);
      const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + off[k]);
      if (grid_.test_index(j)) {
        ++member_neighbors;
      } else {
        const Vertex u = step(w, d);
        if (region_.contains(u)) {
          edges_.push_back({u, static_cast<std::uint32_t>(j)});
          ++opened;
        }
      }
    }
    grid_.set_index(i);
    live_ = live_ + opened - member_neighbors;
    members_.push_back(w);
  }

  Region region_{};
  BitGrid grid_;
  std::vector<Vertex> members_;
  std::vector<Slot> edges_;  // stale once the head joins
  std::size_t live_ = 0;
};

using FrontierCluster = BasicFrontierCluster<WholeLattice>;

using Cluster = BasicCluster<HashCellStore, WholeLattice>;
using GridCluster = BasicCluster<GridCellStore, WholeLattice>;

template <class ClusterT>
std::size_t boundary_count(const ClusterT& c) noexcept {
  return c.boundary_count();
}

/// Cluster built by adding the given vertices in order.
template <class ClusterT = Cluster>
ClusterT make_cluster(std::span<const Vertex> vertices) {
  ClusterT c;
  for (Vertex v : vertices) c.add_vertex(v);
  return c;
}

template <class ClusterT = Cluster>
ClusterT make_cluster(std::initializer_list<Vertex> vertices) {
  return make_cluster<ClusterT>(std::span<const Vertex>(vertices.begin(), vertices.size()));
}

}  // namespace fpp
