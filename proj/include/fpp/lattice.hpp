#pragma once

// Geometry of the square lattice Z^2: vertices, adjacency, lattice targets
// along a direction, and the stadium-shaped strip used by restricted runs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "fpp/errors.hpp"

namespace fpp {

struct Vertex {
  std::int32_t x = 0;
  std::int32_t y = 0;

  friend constexpr bool operator==(Vertex, Vertex) = default;
  friend constexpr auto operator<=>(Vertex, Vertex) = default;
};

inline std::string to_string(Vertex v) {
  return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + ")";
}

struct VertexHash {
  std::size_t operator()(Vertex v) const noexcept {
    std::uint64_t z = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.x)) << 32) |
                      static_cast<std::uint32_t>(v.y);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<std::size_t>(z ^ (z >> 31));
  }
};

/// Lattice directions in the fixed order E, N, W, S.
enum class Direction : std::uint8_t { east = 0, north = 1, west = 2, south = 3 };

inline constexpr std::array<Direction, 4> kDirections = {Direction::east, Direction::north,
                                                         Direction::west, Direction::south};

constexpr Direction opposite(Direction d) noexcept {
  return static_cast<Direction>((static_cast<unsigned>(d) + 2U) & 3U);
}

constexpr std::array<std::int32_t, 4> kDx = {1, 0, -1, 0};
constexpr std::array<std::int32_t, 4> kDy = {0, 1, 0, -1};

/// Unchecked neighbor; callers on hot paths stay far from the int32 limits.
constexpr Vertex step(Vertex v, Direction d) noexcept {
  const auto i = static_cast<unsigned>(d);
  return {v.x + kDx[i], v.y + kDy[i]};
}

constexpr std::int64_t l1_distance(Vertex a, Vertex b) noexcept {
  const std::int64_t dx = static_cast<std::int64_t>(a.x) - b.x;
  const std::int64_t dy = static_cast<std::int64_t>(a.y) - b.y;
  return (dx < 0 ? -dx : dx) + (dy < 0 ? -dy : dy);
}

/// The four lattice neighbors of v in E, N, W, S order.
inline std::array<Vertex, 4> neighbors(Vertex v) {
  constexpr auto lo = std::numeric_limits<std::int32_t>::min();
  constexpr auto hi = std::numeric_limits<std::int32_t>::max();
  if (v.x == lo || v.x == hi || v.y == lo || v.y == hi) {
    throw RangeError("neighbors: vertex " + to_string(v) + " is at the coordinate limit");
  }
  return {step(v, Direction::east), step(v, Direction::north), step(v, Direction::west),
          step(v, Direction::south)};
}

struct UnitVector {
  double x = 1.0;
  double y = 0.0;
};

/// Normalizes an arbitrary nonzero direction.
inline UnitVector normalized(double dx, double dy) {
  const double norm = std::hypot(dx, dy);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw PreconditionError("direction must be a finite nonzero vector");
  }
  return {dx / norm, dy / norm};
}

/// (floor(n*v.x), floor(n*v.y)); floor is used for both signs.
inline Vertex integer_part_vector(UnitVector v, std::int64_t n) {
  if (n < 1) {
    throw PreconditionError("integer_part_vector: n must be >= 1");
  }
  if (!(std::abs(std::hypot(v.x, v.y) - 1.0) <= 1e-12)) {
    throw PreconditionError("integer_part_vector: direction is not a unit vector");
  }
  const double fx = std::floor(static_cast<double>(n) * v.x);
  const double fy = std::floor(static_cast<double>(n) * v.y);
  constexpr double lim = static_cast<double>(std::numeric_limits<std::int32_t>::max()) - 1.0;
  if (std::abs(fx) > lim || std::abs(fy) > lim) {
    throw RangeError("integer_part_vector: target outside the coordinate range");
  }
  return {static_cast<std::int32_t>(fx), static_cast<std::int32_t>(fy)};
}

/// Vertices whose Euclidean distance to the segment origin->target is at most
/// half_width (a stadium: the end caps are half-discs).
class StripRegion {
 public:
  StripRegion(Vertex origin, Vertex target, double half_width)
      : origin_(origin), target_(target), half_width_(half_width) {
    if (!(half_width >= 0.0) || !std::isfinite(half_width)) {
      throw PreconditionError("StripRegion: half_width must be finite and nonnegative");
    }
    dx_ = static_cast<double>(target.x) - origin.x;
    dy_ = static_cast<double>(target.y) - origin.y;
    len_sq_ = dx_ * dx_ + dy_ * dy_;
    hw_sq_ = half_width * half_width;
  }

  Vertex origin() const noexcept { return origin_; }
  Vertex target() const noexcept { return target_; }
  double half_width() const noexcept { return half_width_; }

  bool contains(Vertex v) const noexcept {
    const double px = static_cast<double>(v.x) - origin_.x;
    const double py = static_cast<double>(v.y) - origin_.y;
    const double dot = px * dx_ + py * dy_;
    if (len_sq_ == 0.0 || dot <= 0.0) {
      return px * px + py * py <= hw_sq_;
    }
    if (dot >= len_sq_) {
      const double qx = px - dx_;
      const double qy = py - dy_;
      return qx * qx + qy * qy <= hw_sq_;
    }
    // Interior of the segment: compare cross^2 / len^2 <= hw^2 without dividing.
    const double cross = px * dy_ - py * dx_;
    return cross * cross <= hw_sq_ * len_sq_;
  }

  /// Axis-aligned box containing every vertex of the region.
  std::array<std::int32_t, 4> bounding_box() const noexcept {
    const auto pad = static_cast<std::int32_t>(std::ceil(half_width_)) + 1;
    return {std::min(origin_.x, target_.x) - pad, std::min(origin_.y, target_.y) - pad,
            std::max(origin_.x, target_.x) + pad, std::max(origin_.y, target_.y) + pad};
  }

 private:
  Vertex origin_;
  Vertex target_;
  double half_width_;
  double dx_ = 0.0;
  double dy_ = 0.0;
  double len_sq_ = 0.0;
  double hw_sq_ = 0.0;
};

inline bool strip_contains(const StripRegion& s, Vertex v) noexcept { return s.contains(v); }

/// Region admitting every lattice vertex.
struct WholeLattice {
  constexpr bool contains(Vertex) const noexcept { return true; }
};

}  // namespace fpp
