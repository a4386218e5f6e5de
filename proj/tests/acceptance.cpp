// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [criterion ids...]   (default: all 13)
// Exit status 0 iff every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fpp/analysis.hpp"
#include "fpp/cli.hpp"
#include "fpp/engines.hpp"
#include "fpp/polyomino.hpp"

namespace {

using fpp::ClockKind;
using fpp::EngineKind;
using fpp::HitResult;
using fpp::Vertex;

// ---------------------------------------------------------------------------
// Pinned parameters and tolerances

constexpr std::uint64_t kSeed = 20240601;
constexpr std::size_t kReplicates = 2000;

// 1, 3: engine equivalence
constexpr std::int64_t kEquivalenceScales[] = {5, 10, 20};
constexpr std::int64_t kRichardsonScale = 10;
constexpr std::size_t kDeterministicRuns = 200;
// 2: increment law
constexpr std::uint64_t kIncrementSteps = 100000;
// 4, 7, 8: shared sweep
constexpr std::int64_t kSweepTargets[] = {16, 32, 64, 128, 256, 512, 1000, 1024};
constexpr std::int64_t kTowerScale = 1000;
constexpr double kTowerSigmas = 3.0;
constexpr std::int64_t kVarianceScales[] = {16, 32, 64, 128, 256, 512};
constexpr std::size_t kBootstrapResamples = 1000;
constexpr double kBootstrapLevel = 0.95;
constexpr std::int64_t kWindowScales[] = {64, 256, 1024};
constexpr double kWindow = 0.5;
// 5: sequence inequality
constexpr double kEqualityTolerance = 1e-12;
constexpr std::size_t kFuzzSequences = 10000;
constexpr std::size_t kQSquareLimit = 1000000;
constexpr std::size_t kPartsSequences = 1000;
constexpr double kPartsTolerance = 1e-10;
// 6: ratio of squared reciprocals
constexpr std::size_t kRatioTraces = 200;
constexpr std::uint64_t kRatioShort = 10000;
constexpr std::uint64_t kRatioLong = 40000;
constexpr double kRatioMedianStability = 0.20;
// 9: shape constants
constexpr std::int64_t kShapeScales[] = {50, 100, 200};
constexpr std::size_t kShapeReplicates = 200;
constexpr std::uint64_t kGrowthSteps = 100000;
constexpr std::uint64_t kRootSteps = 10000;
constexpr double kShapeTolerance = 0.10;
// 10: conditional normality
constexpr std::uint64_t kCltLength = 10000;
constexpr std::size_t kCltResamples = 10000;
// 11: isoperimetry
constexpr std::size_t kIsoRuns = 1000;
// 12: strip
constexpr std::int64_t kStripScale = 200;
constexpr double kStripAlpha = 0.75;
constexpr double kStripConstant = 2.0;

// ---------------------------------------------------------------------------

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

unsigned workers() { return fpp::cli::default_workers(); }

fpp::SimConfig axis(std::int64_t n, EngineKind e = EngineKind::eden,
                    ClockKind c = ClockKind::exponential) {
  fpp::SimConfig cfg;
  cfg.n = n;
  cfg.engine = e;
  cfg.clock = c;
  return cfg;
}

std::uint64_t family(std::uint64_t criterion, std::uint64_t sub) { return (criterion << 8) | sub; }

std::vector<HitResult> hits(const fpp::SimConfig& cfg, std::uint64_t fam, std::size_t reps) {
  return fpp::cli::farm(reps, workers(), [&](std::size_t r) {
    fpp::RngStream rng(kSeed, (fam << 40) | r);
    return fpp::run_engine(cfg, rng);
  });
}

std::vector<double> times(const std::vector<HitResult>& h) {
  std::vector<double> v;
  for (const auto& x : h) v.push_back(x.passage_time);
  return v;
}

fpp::GrowthTrace eden_trace(std::uint64_t fam, std::uint64_t r, std::uint64_t steps) {
  fpp::RngStream rng(kSeed, (fam << 40) | r);
  return *fpp::grow(EngineKind::eden, ClockKind::exponential, steps, rng, true).trace;
}

// ---------------------------------------------------------------------------
// Shared sweep for criteria 4, 7 and 8

struct Sweep {
  std::map<std::int64_t, std::vector<HitResult>> by_scale;
};

const Sweep& sweep() {
  static std::optional<Sweep> cache;
  if (cache) return *cache;
  std::vector<Vertex> targets;
  for (auto n : kSweepTargets) targets.push_back({static_cast<std::int32_t>(n), 0});
  const std::int64_t largest = *std::max_element(std::begin(kSweepTargets), std::end(kSweepTargets));
  const std::uint64_t cap = axis(largest).step_cap();
  std::cerr << "shared sweep: " << kReplicates << " Eden runs to (" << largest << ",0)\n";
  const auto runs = fpp::cli::farm(kReplicates, workers(), [&](std::size_t r) {
    fpp::RngStream rng(kSeed, (family(4, 0) << 40) | r);
    fpp::EdenProcess<> p(rng);
    return fpp::run_until_all_hit(p, targets, cap);
  });
  Sweep s;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto& v = s.by_scale[kSweepTargets[k]];
    for (const auto& run : runs) v.push_back(run[k]);
  }
  cache = std::move(s);
  return *cache;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome engine_equivalence() {
  Outcome o{true, ""};
  for (auto n : kEquivalenceScales) {
    const auto e = times(hits(axis(n), family(1, 0) + static_cast<std::uint64_t>(n), kReplicates));
    const auto d = times(hits(axis(n, EngineKind::dijkstra),
                              family(1, 100) + static_cast<std::uint64_t>(n), kReplicates));
    const auto ks = fpp::ks_two_sample(e, d);
    o.pass = o.pass && ks.passed();
    o.detail += "n=" + std::to_string(n) + " D=" + fmt(ks.statistic) + "<" + fmt(ks.critical) + " ";
  }
  return o;
}

Outcome increment_law() {
  const auto t = eden_trace(family(2, 0), 0, kIncrementSteps);
  std::vector<double> z;
  for (std::size_t j = 1; j < t.times.size(); ++j) {
    z.push_back((t.times[j] - t.times[j - 1]) * t.y_counts[j - 1]);
  }
  const auto ks = fpp::ks_one_sample(z, [](double x) { return fpp::exponential_cdf(x); });
  return {ks.passed(), "pooled=" + std::to_string(z.size()) + " D=" + fmt(ks.statistic) + "<" +
                           fmt(ks.critical)};
}

Outcome richardson_remark() {
  const auto e = times(hits(axis(kRichardsonScale), family(3, 0), kReplicates));
  const auto r = times(hits(axis(kRichardsonScale, EngineKind::richardson), family(3, 1), kReplicates));
  const auto ks = fpp::ks_two_sample(e, r);
  bool unit = true;
  fpp::SimConfig det = axis(kRichardsonScale, EngineKind::richardson, ClockKind::deterministic);
  det.retain_trace = true;
  for (std::size_t i = 0; i < kDeterministicRuns; ++i) {
    fpp::RngStream rng(kSeed, (family(3, 2) << 40) | i);
    const auto h = fpp::run_richardson(det, rng);
    for (std::size_t j = 1; j < h.trace->times.size(); ++j) {
      unit = unit && (h.trace->times[j] - h.trace->times[j - 1] == 1.0);
    }
    unit = unit && h.passage_time == static_cast<double>(h.hit_index);
  }
  return {ks.passed() && unit, "D=" + fmt(ks.statistic) + "<" + fmt(ks.critical) +
                                   " deterministic_unit_increments=" + (unit ? "yes" : "no")};
}

Outcome conditional_moments() {
  const auto& runs = sweep().by_scale.at(kTowerScale);
  // E[T | order] = mu_M exactly for every run, so T - mu_M has mean zero; the
  // standard error is that of the paired difference.
  std::vector<double> diff;
  std::size_t ineq = 0;
  std::size_t total = 0;
  for (const auto& [n, v] : sweep().by_scale) {
    for (const auto& h : v) {
      const double m = static_cast<double>(h.hit_index);
      ineq += (h.mu * h.mu <= h.sigma_sq * m * (1.0 + 1e-12)) && (h.sigma_sq <= h.mu);
      ++total;
    }
  }
  std::vector<double> t, mu;
  for (const auto& h : runs) {
    diff.push_back(h.passage_time - h.mu);
    t.push_back(h.passage_time);
    mu.push_back(h.mu);
  }
  const double gap = std::abs(fpp::mean_of(t) - fpp::mean_of(mu));
  const double se = std::sqrt(fpp::variance_of(diff) / static_cast<double>(diff.size()));
  const bool pass = gap <= kTowerSigmas * se && ineq == total;
  return {pass, "|mean T - mean mu|=" + fmt(gap) + " <= 3SE=" + fmt(kTowerSigmas * se) +
                    " inequalities " + std::to_string(ineq) + "/" + std::to_string(total)};
}

Outcome sequence_inequality() {
  // (a) equality case
  const auto q = fpp::q_sequence(1000);
  double worst_eq = 0.0;
  for (double a : {0.5, 1.0, 3.0}) {
    std::vector<double> xs(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) xs[j] = a * q[j];
    const auto r = fpp::lemma2_check(xs, a);
    worst_eq = std::max(worst_eq, std::abs(r.margin) / r.sum_squares);
  }
  const bool a_ok = worst_eq <= kEqualityTolerance;
  // (b) random constrained sequences
  fpp::RngStream rng(kSeed, family(5, 0) << 40);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < kFuzzSequences; ++t) {
    std::vector<double> xs(2 + rng.uniform_index(199));
    for (double& x : xs) x = rng.uniform01();
    violations += !fpp::lemma2_check(xs, fpp::tightest_root_constant(xs)).holds;
  }
  // (c) q-square bound for every n up to the limit
  const auto qs = fpp::q_square_bound_check(kQSquareLimit);
  // (d) summation by parts
  double worst_parts = 0.0;
  for (std::size_t t = 0; t < kPartsSequences; ++t) {
    std::vector<double> xs(1 + rng.uniform_index(1000));
    for (double& x : xs) x = rng.uniform01() * 5.0;
    const auto dec = fpp::rearrange_decreasing(xs);
    fpp::CompensatedSum direct;
    for (double x : dec) direct.add(x * x);
    worst_parts = std::max(worst_parts,
                           std::abs(fpp::sum_squares_by_parts(dec) - direct.value()) / direct.value());
  }
  const bool pass = a_ok && violations == 0 && !qs.first_failure && worst_parts <= kPartsTolerance;
  return {pass, "(a) rel margin " + fmt(worst_eq) + " (b) violations " + std::to_string(violations) +
                    " (c) first failure " +
                    (qs.first_failure ? std::to_string(*qs.first_failure) : std::string("none")) +
                    " (d) max rel err " + fmt(worst_parts)};
}

Outcome squared_sum_ratio() {
  const auto traces = fpp::cli::farm(kRatioTraces, workers(), [](std::size_t r) {
    return eden_trace(family(6, 0), r, kRatioLong);
  });
  std::vector<double> short_r, long_r;
  for (const auto& t : traces) {
    short_r.push_back(fpp::lemma1_ratio(t, kRatioShort));
    long_r.push_back(fpp::lemma1_ratio(t, kRatioLong));
  }
  const double p5 = fpp::quantile(short_r, 0.05);
  const double m1 = fpp::quantile(short_r, 0.5);
  const double m2 = fpp::quantile(long_r, 0.5);
  const double drift = std::abs(m2 - m1) / m1;
  return {p5 > 0.0 && drift <= kRatioMedianStability,
          "p5=" + fmt(p5) + " median(1e4)=" + fmt(m1) + " median(4e4)=" + fmt(m2) +
              " drift=" + fmt(drift)};
}

Outcome variance_growth() {
  std::vector<fpp::SampleSet> sets;
  std::vector<fpp::ScalePoint> pts;
  bool increasing = true;
  double prev = -1.0;
  std::string vars;
  for (auto n : kVarianceScales) {
    sets.emplace_back(times(sweep().by_scale.at(n)), n);
    const double v = sets.back().summary().variance;
    increasing = increasing && v > prev;
    prev = v;
    pts.push_back({static_cast<double>(n), v});
    vars += fmt(v) + " ";
  }
  fpp::RngStream rng(kSeed, family(7, 0) << 40);
  const auto boot = fpp::bootstrap_variance_log_slope(sets, kBootstrapResamples, kBootstrapLevel, rng);
  const auto pow = fpp::fit_scaling(pts, fpp::ScalingModel::power_law);
  return {increasing && boot.estimate > 0.0 && boot.lower_bound > 0.0,
          "var=[" + vars + "] C=" + fmt(boot.estimate) + " lower95=" + fmt(boot.lower_bound) +
              " exploratory beta=" + fmt(pow.slope)};
}

Outcome non_tightness() {
  bool decreasing = true;
  double prev = 2.0;
  std::string masses;
  for (auto n : kWindowScales) {
    const double m = fpp::tightness_scan(times(sweep().by_scale.at(n)), kWindow);
    decreasing = decreasing && m < prev;
    prev = m;
    masses += "n=" + std::to_string(n) + ":" + fmt(m) + " ";
  }
  return {decreasing, masses};
}

Outcome shape_consistency() {
  std::vector<fpp::SampleSet> sets;
  std::vector<HitResult> largest;
  for (auto n : kShapeScales) {
    auto h = hits(axis(n), family(9, 0) + static_cast<std::uint64_t>(n), kShapeReplicates);
    sets.emplace_back(times(h), n);
    largest = std::move(h);
  }
  const auto c1 = fpp::estimate_time_constant(sets, {1.0, 0.0});
  const double n = static_cast<double>(kShapeScales[std::size(kShapeScales) - 1]);
  std::vector<double> m_over;
  for (const auto& h : largest) m_over.push_back(static_cast<double>(h.hit_index) / (n * n));
  const double observed = fpp::mean_of(m_over);

  // c2 from independent fixed-size growth runs.
  const auto grows = fpp::cli::farm(kShapeReplicates, workers(), [](std::size_t r) {
    fpp::RngStream rng(kSeed, (family(9, 200) << 40) | r);
    return fpp::grow(EngineKind::eden, ClockKind::exponential, kGrowthSteps, rng, false);
  });
  std::vector<fpp::GrowthPoint> pts;
  for (const auto& g : grows) pts.push_back({g.hit_index, g.passage_time});
  const auto c2 = fpp::estimate_growth_constant(pts);
  const double predicted = c2.c2 * c1.c1 * c1.c1;
  const double gap1 = std::abs(observed - predicted) / predicted;

  // mu_n / sqrt(n) against c2^(-1/2).
  const auto roots = fpp::cli::farm(kShapeReplicates, workers(), [](std::size_t r) {
    fpp::RngStream rng(kSeed, (family(9, 201) << 40) | r);
    return fpp::grow(EngineKind::eden, ClockKind::exponential, kRootSteps, rng, false);
  });
  std::vector<double> mu_root;
  for (const auto& g : roots) mu_root.push_back(g.mu / std::sqrt(static_cast<double>(kRootSteps)));
  const double target = 1.0 / std::sqrt(c2.c2);
  const double gap2 = std::abs(fpp::mean_of(mu_root) - target) / target;
  return {gap1 <= kShapeTolerance && gap2 <= kShapeTolerance,
          "c1=" + fmt(c1.c1) + " (extrapolated " + fmt(c1.extrapolated) + ") c2=" + fmt(c2.c2) +
              " M/n^2=" + fmt(observed) + " c2*c1^2=" + fmt(predicted) + " gap=" + fmt(gap1) +
              " mu/sqrt(n)=" + fmt(fpp::mean_of(mu_root)) + " c2^-1/2=" + fmt(target) +
              " gap=" + fmt(gap2)};
}

Outcome conditional_clt() {
  const auto t = eden_trace(family(10, 0), 0, kCltLength);
  fpp::RngStream rng(kSeed, family(10, 1) << 40);
  const auto ks = fpp::clt_conditional_check(t.y_counts, kCltResamples, rng);
  double s2 = 0.0, s3 = 0.0;
  for (std::uint32_t y : t.y_counts) {
    s2 += 1.0 / (double(y) * y);
    s3 += 1.0 / (double(y) * y * y);
  }
  const double skew = 2.0 * s3 / std::pow(s2, 1.5);
  return {ks.passed(), "D=" + fmt(ks.statistic) + " critical=" + fmt(ks.critical) +
                           " conditional skewness=" + fmt(skew) + " Edgeworth distance=" +
                           fmt(skew / (6.0 * std::sqrt(2.0 * std::numbers::pi)))};
}

Outcome isoperimetry() {
  const bool hand = fpp::min_boundary(1) == 4 && fpp::min_boundary(2) == 6 && fpp::min_boundary(4) == 8;
  std::size_t snapshots = 0;
  std::size_t ok = 0;
  for (std::size_t r = 0; r < kIsoRuns; ++r) {
    fpp::RngStream rng(kSeed, (family(11, 0) << 40) | r);
    fpp::EdenProcess<> p(rng);
    for (;;) {
      const auto size = p.cluster().size();
      ++snapshots;
      ok += p.cluster().boundary_count() >= fpp::min_boundary(static_cast<int>(size));
      if (size == static_cast<std::size_t>(fpp::kMaxPolyominoCells)) break;
      p.step();
    }
  }
  return {hand && ok == snapshots,
          std::string("hand values ") + (hand ? "ok" : "WRONG") + " snapshots " +
              std::to_string(ok) + "/" + std::to_string(snapshots)};
}

Outcome strip_extension() {
  fpp::SimConfig strip = axis(kStripScale);
  strip.strip_alpha = kStripAlpha;
  strip.strip_constant = kStripConstant;
  const auto s = hits(strip, family(12, 0), kReplicates);
  const auto f = hits(axis(kStripScale), family(12, 1), kReplicates);
  const auto ks = fpp::ks_two_sample(times(s), times(f));
  std::size_t cs = 0;
  double ms = 0.0, mf = 0.0;
  for (const auto& h : s) {
    cs += h.sigma_sq * static_cast<double>(h.hit_index) >= h.mu * h.mu * (1.0 - 1e-12);
    ms += static_cast<double>(h.hit_index);
  }
  for (const auto& h : f) mf += static_cast<double>(h.hit_index);
  ms /= static_cast<double>(s.size());
  mf /= static_cast<double>(f.size());
  return {ks.passed() && cs == s.size() && ms <= mf,
          "half_width=" + fmt(strip.strip_half_width()) + " D=" + fmt(ks.statistic) + "<" +
              fmt(ks.critical) + " cauchy_schwarz " + std::to_string(cs) + "/" +
              std::to_string(s.size()) + " mean M'=" + fmt(ms) + " <= mean M=" + fmt(mf)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const std::string bin = FPP_CLI_PATH;
  const auto dir = std::filesystem::temp_directory_path() / "fpp_acceptance_repro";
  std::filesystem::create_directories(dir);
  const std::vector<std::string> commands = {
      "hit --n 30 --replicates 200 --seed 3",
      "hit --n 12 --replicates 100 --engine dijkstra --seed 4",
      "hit --n 12 --replicates 100 --engine richardson --clock uniform --seed 5",
      "grow --n 5000 --replicates 50 --seed 6",
      "variance-scan --scales 8,16,32,64 --replicates 200 --seed 7",
      "shape --scales 10,20,40 --replicates 100 --seed 8",
      "lemma2 --fuzz 2000 --seed 9",
      "strip --n 40 --alpha 0.75 --replicates 200 --seed 10",
      "engines-compare --n 8 --replicates 300 --seed 11",
      "clt-check --n 2000 --replicates 2000 --seed 12",
      "hit --n 20 --replicates 50 --format json --seed 13",
  };
  std::size_t identical = 0;
  std::string bad;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    std::vector<std::string> outputs;
    for (const char* w : {"1", "3", "1"}) {
      const auto out = dir / ("run" + std::to_string(i) + "_" + std::to_string(outputs.size()));
      const std::string cmd = bin + " " + commands[i] + " --workers " + w + " --out " + out.string();
      const int status = std::system(cmd.c_str());
      if (status != 0) bad += "[" + commands[i] + " status " + std::to_string(status) + "] ";
      outputs.push_back(slurp(out));
    }
    if (!outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2]) {
      ++identical;
    } else {
      bad += "[" + commands[i] + " differs] ";
    }
  }
  std::filesystem::remove_all(dir);
  return {identical == commands.size() && bad.empty(),
          std::to_string(identical) + "/" + std::to_string(commands.size()) +
              " commands byte-identical across reruns and worker counts " + bad};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "engine equivalence (Eden vs Dijkstra)", engine_equivalence},
      {2, "increment law", increment_law},
      {3, "restarted clocks (Richardson)", richardson_remark},
      {4, "conditional moments", conditional_moments},
      {5, "sequence inequality", sequence_inequality},
      {6, "squared reciprocal boundary sums", squared_sum_ratio},
      {7, "variance growth", variance_growth},
      {8, "non-tightness", non_tightness},
      {9, "shape constant consistency", shape_consistency},
      {10, "conditional CLT", conditional_clt},
      {11, "isoperimetry", isoperimetry},
      {12, "strip extension", strip_extension},
      {13, "reproducibility", reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int passed = 0;
  int ran = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ++ran;
    passed += o.pass;
    std::printf("%s criterion %d: %s | %s | %.1fs\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", passed, ran);
  return passed == ran ? 0 : 1;
}
