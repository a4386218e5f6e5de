#pragma once

// Growth engines for first-passage percolation on Z^2 with IID edge times.
//
//  * Eden: the cluster grows by one vertex per step, chosen uniformly over
//    boundary edges; the time increment is Exp with mean 1/Y where Y is the
//    boundary-edge count. This is exponential FPP seen through its
//    reach order.
//  * Dijkstra: classic shortest-path growth with lazily drawn Exp(1) edge
//    weights; the direct definition of passage times.
//  * Richardson: every boundary edge draws a fresh clock each step and the
//    smallest one fires. With exponential clocks this has the Eden law.
//
// All three share the same recording: vertices in reach order, Y_j just
// before step j, reach times, and running compensated sums of 1/Y_j and
// 1/Y_j^2 (the conditional mean and variance of T(V_j) given the order).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fpp/cluster.hpp"
#include "fpp/errors.hpp"
#include "fpp/lattice.hpp"
#include "fpp/rng.hpp"
#include "fpp/summation.hpp"

namespace fpp {

enum class EngineKind { eden, dijkstra, richardson };
enum class ClockKind { exponential, uniform, deterministic };

inline std::string_view to_string(EngineKind e) noexcept {
  switch (e) {
    case EngineKind::eden: return "eden";
    case EngineKind::dijkstra: return "dijkstra";
    case EngineKind::richardson: return "richardson";
  }
  return "?";
}

inline std::string_view to_string(ClockKind c) noexcept {
  switch (c) {
    case ClockKind::exponential: return "exponential";
    case ClockKind::uniform: return "uniform";
    case ClockKind::deterministic: return "deterministic";
  }
  return "?";
}

inline std::optional<EngineKind> parse_engine(std::string_view s) noexcept {
  if (s == "eden") return EngineKind::eden;
  if (s == "dijkstra") return EngineKind::dijkstra;
  if (s == "richardson") return EngineKind::richardson;
  return std::nullopt;
}

inline std::optional<ClockKind> parse_clock(std::string_view s) noexcept {
  if (s == "exponential") return ClockKind::exponential;
  if (s == "uniform") return ClockKind::uniform;
  if (s == "deterministic") return ClockKind::deterministic;
  return std::nullopt;
}

/// One clock draw: Exp(1), Uniform(0,2) or the constant 1.
inline double sample_clock(ClockKind c, RngStream& r) noexcept {
  switch (c) {
    case ClockKind::exponential: return -std::log(r.uniform01());
    case ClockKind::uniform: return 2.0 * r.uniform01();
    case ClockKind::deterministic: return 1.0;
  }
  return 1.0;
}

struct SimConfig {
  UnitVector direction{1.0, 0.0};
  std::int64_t n = 1;
  EngineKind engine = EngineKind::eden;
  ClockKind clock = ClockKind::exponential;
  std::optional<double> strip_alpha;
  double strip_constant = 2.0;
  std::optional<std::uint64_t> max_steps;
  std::uint64_t master_seed = 1;
  std::uint64_t replicates = 1000;
  bool retain_trace = false;

  Vertex target() const { return integer_part_vector(direction, n); }

  /// Explicit cap, or 8 n^2 + 10^4 (M(n) grows like n^2).
  std::uint64_t step_cap() const {
    if (max_steps) return *max_steps;
    const auto nn = static_cast<std::uint64_t>(n);
    return 8 * nn * nn + 10'000;
  }

  double strip_half_width() const {
    if (!strip_alpha) throw PreconditionError("strip run requires strip_alpha");
    return strip_constant * std::pow(static_cast<double>(n), *strip_alpha) / 2.0;
  }
};

/// Reach-ordered record of one run: V_0..V_m, Y_1..Y_m, T(V_0)..T(V_m).
struct GrowthTrace {
  std::vector<Vertex> vertices;
  std::vector<std::uint32_t> y_counts;
  std::vector<double> times;

  std::size_t steps() const noexcept { return y_counts.size(); }

  /// Throws CorruptTraceError naming the first broken structural invariant.
  void validate() const {
    if (vertices.empty() || vertices.size() != times.size() ||
        vertices.size() != y_counts.size() + 1) {
      throw CorruptTraceError("trace: inconsistent lengths");
    }
    if (times[0] != 0.0) throw CorruptTraceError("trace: T(V_0) != 0");
    for (std::size_t j = 1; j < times.size(); ++j) {
      if (times[j] < times[j - 1]) {
        throw CorruptTraceError("trace: times decrease at step " + std::to_string(j));
      }
    }
    for (std::size_t j = 0; j < y_counts.size(); ++j) {
      if (y_counts[j] == 0) {
        throw CorruptTraceError("trace: Y_" + std::to_string(j + 1) + " is zero");
      }
    }
  }
};

struct HitResult {
  double passage_time = 0.0;
  std::uint64_t hit_index = 0;
  double mu = 0.0;        // sum_{j<=M} 1/Y_j
  double sigma_sq = 0.0;  // sum_{j<=M} 1/Y_j^2
  std::optional<GrowthTrace> trace;
};

/// Shared bookkeeping for all engines.
class GrowthRecorder {
 public:
  GrowthRecorder(Vertex origin, bool retain) : retain_(retain) {
    if (retain_) {
      trace_.vertices.push_back(origin);
      trace_.times.push_back(0.0);
    }
  }

  void record(Vertex v, std::size_t y, double increment) { record_at(v, y, time_ + increment); }

  /// Records V_j with its absolute reach time.
  void record_at(Vertex v, std::size_t y, double time) {
    time_ = time;
    ++steps_;
    const double inv = 1.0 / static_cast<double>(y);
    mu_.add(inv);
    sigma_sq_.add(inv * inv);
    if (retain_) {
      trace_.vertices.push_back(v);
      trace_.y_counts.push_back(static_cast<std::uint32_t>(y));
      trace_.times.push_back(time_);
    }
  }

  double time() const noexcept { return time_; }
  std::uint64_t steps() const noexcept { return steps_; }
  double mu() const noexcept { return mu_.value(); }
  double sigma_sq() const noexcept { return sigma_sq_.value(); }
  bool retains_trace() const noexcept { return retain_; }
  const GrowthTrace& trace() const noexcept { return trace_; }
  GrowthTrace take_trace() { return std::move(trace_); }

 private:
  bool retain_;
  double time_ = 0.0;
  std::uint64_t steps_ = 0;
  CompensatedSum mu_;
  CompensatedSum sigma_sq_;
  GrowthTrace trace_;
};

/// Eden growth: uniform boundary edge, Exp(mean 1/Y) increment.
template <class ClusterT = FrontierCluster>
class EdenProcess {
 public:
  explicit EdenProcess(RngStream& rng, bool retain = false, ClusterT cluster = {},
                       Vertex origin = {})
      : rng_(&rng), cluster_(std::move(cluster)), rec_(origin, retain) {
    cluster_.add_vertex(origin);
  }

  /// One Eden step; returns the vertex that joined.
  Vertex step() {
    const std::size_t y = cluster_.boundary_count();
    if (y == 0) throw LogicError("eden_step: empty boundary");
    Vertex head;
    if constexpr (requires { cluster_.grow_once(*rng_); }) {
      head = cluster_.grow_once(*rng_);
    } else {
      head = cluster_.sample_boundary_head(*rng_);
      cluster_.add_vertex(head);
    }
    rec_.record(head, y, sample_exponential_rate(*rng_, static_cast<double>(y)));
    return head;
  }

  const ClusterT& cluster() const noexcept { return cluster_; }
  GrowthRecorder& recorder() noexcept { return rec_; }
  const GrowthRecorder& recorder() const noexcept { return rec_; }

 private:
  RngStream* rng_;
  ClusterT cluster_;
  GrowthRecorder rec_;
};

/// Free-function form of one Eden step.
template <class ClusterT>
Vertex eden_step(EdenProcess<ClusterT>& process) {
  return process.step();
}

/// Lazily materialized IID Exp(1) edge weights keyed by undirected edge.
class EdgeWeights {
 public:
  explicit EdgeWeights(RngStream& rng) : rng_(&rng) {}

  double weight(Vertex a, Direction d) {
    // Canonical key: the endpoint with smaller coordinates plus the axis.
    Vertex lo = a;
    bool horizontal = (d == Direction::east || d == Direction::west);
    if (d == Direction::west || d == Direction::south) lo = step(a, d);
    auto [it, inserted] = weights_.try_emplace(Key{lo, horizontal}, 0.0);
    if (inserted) it->second = -std::log(rng_->uniform01());
    return it->second;
  }

  std::size_t materialized() const noexcept { return weights_.size(); }

 private:
  struct Key {
    Vertex lo;
    bool horizontal;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return VertexHash{}(k.lo) ^ (k.horizontal ? 0x9e3779b97f4a7c15ULL : 0ULL);
    }
  };

  RngStream* rng_;
  std::unordered_map<Key, double, KeyHash> weights_;
};

/// Dijkstra growth: settles vertices in increasing passage time.
template <class ClusterT = GridCluster>
class DijkstraProcess {
 public:
  explicit DijkstraProcess(RngStream& rng, bool retain = false, ClusterT cluster = {},
                           Vertex origin = {})
      : weights_(rng), cluster_(std::move(cluster)), rec_(origin, retain) {
    cluster_.add_vertex(origin);
    relax(origin, 0.0);
  }

  Vertex step() {
    while (!queue_.empty()) {
      const Entry e = queue_.top();
      queue_.pop();
      if (cluster_.contains(e.v)) continue;  // stale
      const std::size_t y = cluster_.boundary_count();
      cluster_.add_vertex(e.v);
      rec_.record_at(e.v, y, e.time);
      relax(e.v, e.time);
      return e.v;
    }
    throw LogicError("dijkstra: frontier exhausted");
  }

  const ClusterT& cluster() const noexcept { return cluster_; }
  GrowthRecorder& recorder() noexcept { return rec_; }
  const GrowthRecorder& recorder() const noexcept { return rec_; }
  const EdgeWeights& weights() const noexcept { return weights_; }

 private:
  struct Entry {
    double time;
    std::uint64_t order;
    Vertex v;
    // Min-heap on (time, insertion order).
    bool operator<(const Entry& o) const noexcept {
      return time != o.time ? time > o.time : order > o.order;
    }
  };

  void relax(Vertex from, double t) {
    for (Direction d : kDirections) {
      const Vertex u = fpp::step(from, d);
      if (cluster_.contains(u) || !cluster_.region().contains(u)) continue;
      queue_.push({t + weights_.weight(from, d), counter_++, u});
    }
  }

  EdgeWeights weights_;
  ClusterT cluster_;
  GrowthRecorder rec_;
  std::priority_queue<Entry> queue_;
  std::uint64_t counter_ = 0;
};

/// Richardson growth: all boundary clocks restart after every crossing.
template <class ClusterT = GridCluster>
class RichardsonProcess {
 public:
  RichardsonProcess(RngStream& rng, ClockKind clock, bool retain = false, ClusterT cluster = {},
                    Vertex origin = {})
      : rng_(&rng), clock_(clock), cluster_(std::move(cluster)), rec_(origin, retain) {
    cluster_.add_vertex(origin);
  }

  Vertex step() {
    const std::size_t y = cluster_.boundary_count();
    if (y == 0) throw LogicError("richardson: empty boundary");
    std::size_t winner = 0;
    double best = 0.0;
    if (clock_ == ClockKind::deterministic) {
      // Every clock rings at 1; ties are broken uniformly over edges.
      winner = static_cast<std::size_t>(rng_->uniform_index(y));
      best = 1.0;
    } else {
      best = sample_clock(clock_, *rng_);
      for (std::size_t i = 1; i < y; ++i) {
        const double c = sample_clock(clock_, *rng_);
        if (c < best) {
          best = c;
          winner = i;
        }
      }
    }
    const Vertex head = cluster_.boundary_edge(winner).head();
    cluster_.add_vertex(head);
    rec_.record(head, y, best);
    return head;
  }

  const ClusterT& cluster() const noexcept { return cluster_; }
  GrowthRecorder& recorder() noexcept { return rec_; }
  const GrowthRecorder& recorder() const noexcept { return rec_; }

 private:
  RngStream* rng_;
  ClockKind clock_;
  ClusterT cluster_;
  GrowthRecorder rec_;
};

namespace detail {

template <class Process>
HitResult finish(Process& p) {
  HitResult out;
  auto& rec = p.recorder();
  out.passage_time = rec.time();
  out.hit_index = rec.steps();
  out.mu = rec.mu();
  out.sigma_sq = rec.sigma_sq();
  if (rec.retains_trace()) out.trace = rec.take_trace();
  return out;
}

}  // namespace detail

/// Steps until target joins the cluster; ResourceError past cap steps.
template <class Process>
HitResult run_until_hit(Process& p, Vertex target, std::uint64_t cap) {
  if (!p.cluster().contains(target)) {
    do {
      if (p.recorder().steps() >= cap) throw ResourceError(cap);
    } while (!(p.step() == target));
  }
  return detail::finish(p);
}

/// Continues one run until every target has joined; result k belongs to targets[k].
/// Traces are never retained here.
template <class Process>
std::vector<HitResult> run_until_all_hit(Process& p, std::span<const Vertex> targets,
                                         std::uint64_t cap) {
  std::vector<HitResult> out(targets.size());
  std::vector<bool> done(targets.size(), false);
  std::size_t remaining = targets.size();
  auto collect = [&] {
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (!done[k] && p.cluster().contains(targets[k])) {
        const auto& rec = p.recorder();
        out[k].passage_time = rec.time();
        out[k].hit_index = rec.steps();
        out[k].mu = rec.mu();
        out[k].sigma_sq = rec.sigma_sq();
        done[k] = true;
        --remaining;
      }
    }
  };
  collect();
  while (remaining > 0) {
    if (p.recorder().steps() >= cap) throw ResourceError(cap);
    const Vertex v = p.step();
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (!done[k] && v == targets[k]) {
        collect();
        break;
      }
    }
  }
  return out;
}

/// Exactly `steps` steps.
template <class Process>
HitResult run_steps(Process& p, std::uint64_t steps) {
  for (std::uint64_t j = 0; j < steps; ++j) p.step();
  return detail::finish(p);
}

namespace detail {

inline Vertex checked_target(const SimConfig& config) {
  const Vertex target = config.target();
  if (target == Vertex{}) {
    throw PreconditionError("target " + to_string(target) + " equals the origin");
  }
  return target;
}

inline StripRegion make_strip_region(const SimConfig& config, Vertex target) {
  if (!config.strip_alpha || !(*config.strip_alpha > 0.0 && *config.strip_alpha < 1.0)) {
    throw PreconditionError("strip run requires strip_alpha in (0,1)");
  }
  if (!(config.strip_constant > 0.0)) {
    throw PreconditionError("strip_constant must be positive");
  }
  const double hw = config.strip_half_width();
  if (!(hw >= 1.0)) {
    throw PreconditionError("strip half-width " + std::to_string(hw) + " is below 1");
  }
  return StripRegion(Vertex{}, target, hw);
}

inline BasicCluster<GridCellStore, StripRegion> make_indexed_strip_cluster(const StripRegion& region) {
  const auto box = region.bounding_box();
  return BasicCluster<GridCellStore, StripRegion>(region,
                                                  GridCellStore(box[0], box[1], box[2], box[3]));
}

}  // namespace detail

/// Eden run from the origin until the lattice target for (direction, n) is reached.
inline HitResult run_eden(const SimConfig& config, RngStream& r) {
  const Vertex target = detail::checked_target(config);
  EdenProcess<FrontierCluster> p(r, config.retain_trace);
  return run_until_hit(p, target, config.step_cap());
}

inline HitResult run_dijkstra(const SimConfig& config, RngStream& r) {
  const Vertex target = detail::checked_target(config);
  DijkstraProcess<GridCluster> p(r, config.retain_trace);
  return run_until_hit(p, target, config.step_cap());
}

inline HitResult run_richardson(const SimConfig& config, RngStream& r) {
  const Vertex target = detail::checked_target(config);
  RichardsonProcess<GridCluster> p(r, config.clock, config.retain_trace);
  return run_until_hit(p, target, config.step_cap());
}

/// The configured engine restricted to the stadium of half-width
/// strip_constant * n^alpha / 2 around the segment origin -> target.
inline HitResult run_strip(const SimConfig& config, RngStream& r) {
  const Vertex target = detail::checked_target(config);
  const StripRegion region = detail::make_strip_region(config, target);
  const bool retain = config.retain_trace;
  switch (config.engine) {
    case EngineKind::eden: {
      EdenProcess<BasicFrontierCluster<StripRegion>> p(r, retain,
                                                        BasicFrontierCluster<StripRegion>(region));
      return run_until_hit(p, target, config.step_cap());
    }
    case EngineKind::dijkstra: {
      DijkstraProcess<BasicCluster<GridCellStore, StripRegion>> p(
          r, retain, detail::make_indexed_strip_cluster(region));
      return run_until_hit(p, target, config.step_cap());
    }
    case EngineKind::richardson: {
      RichardsonProcess<BasicCluster<GridCellStore, StripRegion>> p(
          r, config.clock, retain, detail::make_indexed_strip_cluster(region));
      return run_until_hit(p, target, config.step_cap());
    }
  }
  throw LogicError("unknown engine");
}

/// Dispatches on config.engine, restricted to the strip when strip_alpha is set.
inline HitResult run_engine(const SimConfig& config, RngStream& r) {
  if (config.strip_alpha) return run_strip(config, r);
  switch (config.engine) {
    case EngineKind::eden: return run_eden(config, r);
    case EngineKind::dijkstra: return run_dijkstra(config, r);
    case EngineKind::richardson: return run_richardson(config, r);
  }
  throw LogicError("unknown engine");
}

/// Runs the configured engine for a fixed number of steps (no target).
inline HitResult grow(EngineKind engine, ClockKind clock, std::uint64_t steps, RngStream& r,
                      bool retain) {
  switch (engine) {
    case EngineKind::eden: {
      EdenProcess<FrontierCluster> p(r, retain);
      return run_steps(p, steps);
    }
    case EngineKind::dijkstra: {
      DijkstraProcess<GridCluster> p(r, retain);
      return run_steps(p, steps);
    }
    case EngineKind::richardson: {
      RichardsonProcess<GridCluster> p(r, clock, retain);
      return run_steps(p, steps);
    }
  }
  throw LogicError("unknown engine");
}

}  // namespace fpp
