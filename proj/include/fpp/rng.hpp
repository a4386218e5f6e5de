#pragma once

// Deterministic, addressable random streams.
//
// Each stream is a xoshiro256** generator whose 256-bit state is filled by
// SplitMix64 from a key that mixes (master_seed, stream_id). Streams are
// therefore addressable by index with no coordination between workers, and
// equal lineage always gives an identical sequence. Only integer arithmetic
// and one std::log per exponential draw are involved, so sequences are
// bit-identical across platforms up to the last-bit accuracy of libm's log.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "fpp/errors.hpp"

namespace fpp {

namespace detail {

constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : master_seed_(master_seed), stream_id_(stream_id) {
    // Two SplitMix64 passes: the first scrambles the master seed, the second
    // is keyed by that output combined with the stream id.
    std::uint64_t outer = master_seed;
    const std::uint64_t k0 = detail::splitmix64_next(outer);
    std::uint64_t inner = stream_id;
    const std::uint64_t k1 = detail::splitmix64_next(inner);
    std::uint64_t key = k0 ^ detail::rotl(k1, 17) ^ (stream_id * 0xd1342543de82ef95ULL);
    for (auto& word : s_) {
      word = detail::splitmix64_next(key);
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) {
      s_[0] = 1;
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0,1): the midpoints of 2^53 equal cells.
  double uniform01() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform index in [0, n) by 128-bit multiply-shift; bias is at most n / 2^64.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
};

inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept {
  return {master_seed, stream_id};
}

inline double sample_uniform01(RngStream& r) noexcept { return r.uniform01(); }

/// Exp with the given mean by inverse transform, -mean * ln(u).
inline double sample_exponential(RngStream& r, double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw PreconditionError("sample_exponential: mean must be positive and finite");
  }
  return -mean * std::log(r.uniform01());
}

/// Unchecked rate form used by the engines: Exp(mean 1/rate).
inline double sample_exponential_rate(RngStream& r, double rate) noexcept {
  return -std::log(r.uniform01()) / rate;
}

}  // namespace fpp
