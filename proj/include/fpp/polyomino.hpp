#pragma once

// Exhaustive edge-isoperimetry for small lattice animals.
//
// Fixed polyominoes of k+1 cells are generated from those of k cells by
// attaching one neighboring cell and normalizing the translation (minimum x
// and y moved to 0); a hash set on the normalized cell list removes
// duplicates. The edge boundary of an n-cell animal is 4n - 2*(adjacent
// cell pairs).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_set>
#include <vector>

#include "fpp/errors.hpp"
#include "fpp/lattice.hpp"

namespace fpp {

inline constexpr int kMaxPolyominoCells = 12;

struct PolyominoLevel {
  std::size_t cells = 0;
  std::size_t fixed_count = 0;
  std::size_t min_boundary = 0;
};

namespace detail {

// A normalized animal: cells packed as x*32+y (x,y < 32), sorted, as a u16string.
using PackedAnimal = std::u16string;

inline PackedAnimal normalize(std::vector<Vertex>& cells) {
  std::int32_t mx = cells.front().x;
  std::int32_t my = cells.front().y;
  for (const Vertex& v : cells) {
    mx = std::min(mx, v.x);
    my = std::min(my, v.y);
  }
  PackedAnimal out;
  out.reserve(cells.size());
  for (const Vertex& v : cells) {
    out.push_back(static_cast<char16_t>((v.x - mx) * 32 + (v.y - my)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t edge_boundary(const PackedAnimal& a) {
  std::size_t adjacent = 0;
  for (char16_t c : a) {
    // Count each adjacent pair once through its east and north partners.
    if ((c & 31U) < 31U && std::binary_search(a.begin(), a.end(), static_cast<char16_t>(c + 1))) ++adjacent;
    if (std::binary_search(a.begin(), a.end(), static_cast<char16_t>(c + 32))) ++adjacent;
  }
  return 4 * a.size() - 2 * adjacent;
}

}  // namespace detail

/// Counts and minimum edge boundaries of fixed polyominoes of 1..max_cells cells.
inline std::vector<PolyominoLevel> enumerate_polyominoes(int max_cells) {
  if (max_cells < 1 || max_cells > kMaxPolyominoCells) {
    throw PreconditionError("enumerate_polyominoes: cell count must be in [1, " +
                            std::to_string(kMaxPolyominoCells) + "]");
  }
  std::vector<PolyominoLevel> levels;
  std::vector<detail::PackedAnimal> current = {detail::PackedAnimal(1, 0)};
  levels.push_back({1, 1, 4});

  std::vector<Vertex> scratch;
  for (int k = 2; k <= max_cells; ++k) {
    std::unordered_set<detail::PackedAnimal> next;
    for (const auto& animal : current) {
      for (char16_t c : animal) {
        const Vertex base{static_cast<std::int32_t>(c / 32), static_cast<std::int32_t>(c % 32)};
        for (Direction d : kDirections) {
          const Vertex add = step(base, d);
          if (add.x >= 0 && add.y >= 0 &&
              std::binary_search(animal.begin(), animal.end(),
                                 static_cast<char16_t>(add.x * 32 + add.y))) {
            continue;
          }
          scratch.clear();
          for (char16_t e : animal) {
            scratch.push_back({static_cast<std::int32_t>(e / 32), static_cast<std::int32_t>(e % 32)});
          }
          scratch.push_back(add);
          next.insert(detail::normalize(scratch));
        }
      }
    }
    current.assign(next.begin(), next.end());
    std::size_t best = 4 * static_cast<std::size_t>(k);
    for (const auto& animal : current) {
      best = std::min(best, detail::edge_boundary(animal));
    }
    levels.push_back({static_cast<std::size_t>(k), current.size(), best});
  }
  return levels;
}

/// Minimum edge boundary over all n-cell polyominoes, by exhaustive search (n <= 12).
inline std::size_t min_boundary(int n) {
  if (n < 1 || n > kMaxPolyominoCells) {
    throw PreconditionError("min_boundary: n must be in [1, " + std::to_string(kMaxPolyominoCells) +
                            "], got " + std::to_string(n));
  }
  static std::once_flag once;
  static std::vector<PolyominoLevel> table;
  std::call_once(once, [] { table = enumerate_polyominoes(kMaxPolyominoCells); });
  return table[static_cast<std::size_t>(n - 1)].min_boundary;
}

}  // namespace fpp
