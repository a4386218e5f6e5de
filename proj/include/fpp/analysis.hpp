#pragma once

// Statistics over growth runs: conditional moments given the reach order,
// the deterministic sequence inequality behind the variance lower bound,
// shape-constant estimators, tightness and scaling fits, and the
// distribution tests used to compare engines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "fpp/engines.hpp"
#include "fpp/errors.hpp"
#include "fpp/lattice.hpp"
#include "fpp/rng.hpp"
#include "fpp/summation.hpp"

namespace fpp {

// ---------------------------------------------------------------------------
// Conditional moments

/// Prefix sums mu_j = sum_{i<=j} 1/Y_i and sigma_sq_j = sum_{i<=j} 1/Y_i^2.
/// Index j-1 holds the value after j steps.
struct ConditionalMoments {
  std::vector<double> mu;
  std::vector<double> sigma_sq;
};

inline ConditionalMoments conditional_moments(std::span<const std::uint32_t> y_counts) {
  if (y_counts.empty()) {
    throw PreconditionError("conditional_moments: trace has no steps");
  }
  ConditionalMoments out;
  out.mu.reserve(y_counts.size());
  out.sigma_sq.reserve(y_counts.size());
  CompensatedSum mu;
  CompensatedSum sq;
  for (std::size_t j = 0; j < y_counts.size(); ++j) {
    if (y_counts[j] == 0) {
      throw CorruptTraceError("conditional_moments: Y_" + std::to_string(j + 1) + " is zero");
    }
    const double inv = 1.0 / static_cast<double>(y_counts[j]);
    mu.add(inv);
    sq.add(inv * inv);
    out.mu.push_back(mu.value());
    out.sigma_sq.push_back(sq.value());
  }
  return out;
}

inline ConditionalMoments conditional_moments(const GrowthTrace& trace) {
  return conditional_moments(std::span<const std::uint32_t>(trace.y_counts));
}

/// (log n)^-1 * sum_{j<=n} 1/Y_j^2.
inline double lemma1_ratio(std::span<const std::uint32_t> y_counts, std::size_t n) {
  if (n < 2) throw PreconditionError("lemma1_ratio: n must be >= 2");
  if (n > y_counts.size()) {
    throw PreconditionError("lemma1_ratio: n exceeds the trace length");
  }
  CompensatedSum sq;
  for (std::size_t j = 0; j < n; ++j) {
    if (y_counts[j] == 0) throw CorruptTraceError("lemma1_ratio: zero boundary count");
    const double inv = 1.0 / static_cast<double>(y_counts[j]);
    sq.add(inv * inv);
  }
  return sq.value() / std::log(static_cast<double>(n));
}

inline double lemma1_ratio(const GrowthTrace& trace, std::size_t n) {
  return lemma1_ratio(std::span<const std::uint32_t>(trace.y_counts), n);
}

/// The unique j with trace.vertices[j] == target.
inline std::size_t first_hit_index(const GrowthTrace& trace, Vertex target) {
  const auto it = std::find(trace.vertices.begin(), trace.vertices.end(), target);
  if (it == trace.vertices.end()) {
    throw NotFoundError("first_hit_index: " + to_string(target) + " not in trace");
  }
  return static_cast<std::size_t>(it - trace.vertices.begin());
}

// ---------------------------------------------------------------------------
// The sequence inequality: S_n >= a sqrt(n) for all n implies
// sum x_j^2 >= a^2 sum q_j^2 with q_j = sqrt(j) - sqrt(j-1).

/// q_j = sqrt(j) - sqrt(j-1) for j = 1..n, evaluated as 1/(sqrt(j)+sqrt(j-1)).
inline std::vector<double> q_sequence(std::size_t n) {
  if (n < 1) throw PreconditionError("q_sequence: n must be >= 1");
  std::vector<double> q(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const auto dj = static_cast<double>(j);
    q[j - 1] = 1.0 / (std::sqrt(dj) + std::sqrt(dj - 1.0));
  }
  return q;
}

/// Thrown when some partial sum falls below a*sqrt(n).
class ConstraintViolation : public PreconditionError {
 public:
  explicit ConstraintViolation(std::size_t n)
      : PreconditionError("lemma2_check: S_n < a*sqrt(n) first at n=" + std::to_string(n)),
        n_(n) {}
  /// 1-based index of the first violating partial sum.
  std::size_t first_violation() const noexcept { return n_; }

 private:
  std::size_t n_;
};

struct Lemma2Report {
  bool holds = false;        // sum x^2 >= a^2 sum q^2
  double margin = 0.0;       // sum x^2 - a^2 sum q^2
  double sum_squares = 0.0;  // sum x^2
  double q_bound = 0.0;      // a^2 sum q^2
  double log_bound = 0.0;    // a^2 log(n) / 4, the weaker asymptotic form
  bool log_bound_holds = false;
};

/// Relative slack allowed when re-verifying S_n >= a sqrt(n) in floating point.
inline constexpr double kPartialSumTolerance = 1e-12;

inline Lemma2Report lemma2_check(std::span<const double> xs, double a) {
  if (xs.empty()) throw PreconditionError("lemma2_check: empty sequence");
  if (!(a > 0.0) || !std::isfinite(a)) throw PreconditionError("lemma2_check: a must be positive");
  CompensatedSum partial;
  CompensatedSum squares;
  CompensatedSum q_squares;
  for (std::size_t j = 1; j <= xs.size(); ++j) {
    const double x = xs[j - 1];
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw PreconditionError("lemma2_check: entry " + std::to_string(j) + " is not positive");
    }
    partial.add(x);
    const double floor = a * std::sqrt(static_cast<double>(j));
    if (partial.value() < floor * (1.0 - kPartialSumTolerance)) throw ConstraintViolation(j);
    squares.add(x * x);
    const auto dj = static_cast<double>(j);
    const double q = 1.0 / (std::sqrt(dj) + std::sqrt(dj - 1.0));
    q_squares.add(q * q);
  }
  Lemma2Report r;
  r.sum_squares = squares.value();
  r.q_bound = a * a * q_squares.value();
  r.margin = r.sum_squares - r.q_bound;
  r.holds = r.margin >= 0.0;
  r.log_bound = a * a * std::log(static_cast<double>(xs.size())) / 4.0;
  r.log_bound_holds = r.sum_squares >= r.log_bound;
  return r;
}

/// The largest a with S_n >= a sqrt(n) for every n: min_n S_n / sqrt(n).
inline double tightest_root_constant(std::span<const double> xs) {
  if (xs.empty()) throw PreconditionError("tightest_root_constant: empty sequence");
  CompensatedSum partial;
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= xs.size(); ++j) {
    partial.add(xs[j - 1]);
    a = std::min(a, partial.value() / std::sqrt(static_cast<double>(j)));
  }
  return a;
}

/// Decreasing rearrangement. Every prefix sum of the result dominates the
/// matching prefix sum of the input; this is checked on each call.
inline std::vector<double> rearrange_decreasing(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  CompensatedSum before;
  CompensatedSum after;
  for (std::size_t k = 0; k < out.size(); ++k) {
    before.add(xs[k]);
    after.add(out[k]);
    if (after.value() < before.value() - 1e-12 * std::abs(before.value())) {
      throw LogicError("rearrange_decreasing: prefix sum decreased at k=" + std::to_string(k + 1));
    }
  }
  return out;
}

/// S_n x_n + sum_{k<n} S_k (x_k - x_{k+1}); equals sum x_j^2 by Abel summation.
inline double sum_squares_by_parts(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  CompensatedSum total;
  CompensatedSum partial;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    partial.add(xs[k]);
    total.add(partial.value() * (xs[k] - xs[k + 1]));
  }
  partial.add(xs.back());
  total.add(partial.value() * xs.back());
  return total.value();
}

struct QSquareCheck {
  std::optional<std::size_t> first_failure;  // first n with sum q^2 < H_n/4 or H_n/4 < log(n)/4
  double sum_q_squared = 0.0;
  double harmonic = 0.0;
  double sum_q = 0.0;  // telescopes to sqrt(n_max)
};

/// Verifies sum_{j<=n} q_j^2 >= H_n/4 >= log(n)/4 for every n <= n_max by direct summation.
inline QSquareCheck q_square_bound_check(std::size_t n_max) {
  QSquareCheck out;
  CompensatedSum sq;
  CompensatedSum h;
  CompensatedSum q_sum;
  for (std::size_t j = 1; j <= n_max; ++j) {
    const auto dj = static_cast<double>(j);
    const double q = 1.0 / (std::sqrt(dj) + std::sqrt(dj - 1.0));
    sq.add(q * q);
    h.add(1.0 / dj);
    q_sum.add(q);
    if (!out.first_failure && (sq.value() < h.value() / 4.0 || h.value() < std::log(dj))) {
      out.first_failure = j;
    }
  }
  out.sum_q_squared = sq.value();
  out.harmonic = h.value();
  out.sum_q = q_sum.value();
  return out;
}

// ---------------------------------------------------------------------------
// Sample summaries

/// Linear-interpolation quantile (type 7) of unsorted data.
inline double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw PreconditionError("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("quantile: p outside [0,1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw PreconditionError("mean_of: empty input");
  return compensated_sum(v) / static_cast<double>(v.size());
}

/// Unbiased (n-1) sample variance; 0 for a single value.
inline double variance_of(std::span<const double> v) {
  if (v.empty()) throw PreconditionError("variance_of: empty input");
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(v.size() - 1);
}

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;
  double median = 0.0;
  std::size_t count = 0;
};

/// Scalar passage-time samples at one lattice scale.
class SampleSet {
 public:
  SampleSet(std::vector<double> values, std::int64_t n_label,
            ClockKind model = ClockKind::exponential)
      : values_(std::move(values)), n_label_(n_label), model_(model) {
    if (!values_.empty()) {
      summary_.mean = mean_of(values_);
      summary_.variance = variance_of(values_);
      summary_.median = quantile(values_, 0.5);
    }
    summary_.count = values_.size();
  }

  std::span<const double> values() const noexcept { return values_; }
  std::int64_t n_label() const noexcept { return n_label_; }
  ClockKind model() const noexcept { return model_; }
  const SampleSummary& summary() const noexcept { return summary_; }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
  std::int64_t n_label_;
  ClockKind model_;
  SampleSummary summary_;
};

// ---------------------------------------------------------------------------
// Shape constants

struct TimeConstantEstimate {
  double c1 = 0.0;              // mean(T)/n at the largest scale
  double standard_error = 0.0;
  std::int64_t scale = 0;
  double extrapolated = 0.0;    // intercept of mean(T)/n = c + b/n across scales
};

/// Estimates c1 = lim T(0, v^(n))/n from samples at three or more scales.
inline TimeConstantEstimate estimate_time_constant(std::span<const SampleSet> sets,
                                                   UnitVector direction) {
  if (!(std::abs(std::hypot(direction.x, direction.y) - 1.0) <= 1e-12)) {
    throw PreconditionError("estimate_time_constant: direction is not a unit vector");
  }
  if (sets.size() < 3) throw PreconditionError("estimate_time_constant: need >= 3 scales");
  for (const SampleSet& s : sets) {
    if (s.model() != ClockKind::exponential) {
      throw PreconditionError("estimate_time_constant: samples are not from exponential FPP");
    }
    if (s.size() < 2 || s.n_label() < 1) {
      throw PreconditionError("estimate_time_constant: each scale needs >= 2 samples and n >= 1");
    }
  }
  const SampleSet* largest = &sets[0];
  for (const SampleSet& s : sets) {
    if (s.n_label() > largest->n_label()) largest = &s;
  }
  TimeConstantEstimate out;
  const auto n = static_cast<double>(largest->n_label());
  out.scale = largest->n_label();
  out.c1 = largest->summary().mean / n;
  out.standard_error =
      std::sqrt(largest->summary().variance / static_cast<double>(largest->size())) / n;

  // Least squares of mean/n against 1/n.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const SampleSet& s : sets) {
    const double x = 1.0 / static_cast<double>(s.n_label());
    const double y = s.summary().mean / static_cast<double>(s.n_label());
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const auto k = static_cast<double>(sets.size());
  const double denom = k * sxx - sx * sx;
  out.extrapolated = denom != 0.0 ? (sy * sxx - sx * sxy) / denom : out.c1;
  return out;
}

/// One observation (number of reached vertices, time at which it was reached).
struct GrowthPoint {
  std::uint64_t steps = 0;
  double time = 0.0;
};

struct GrowthConstantEstimate {
  double c2 = 0.0;  // mean of steps / time^2
  double standard_error = 0.0;
  std::size_t count = 0;
};

/// Estimates c2 in N_t ~ c2 t^2 as the replicate mean of n / T(V_n)^2.
inline GrowthConstantEstimate estimate_growth_constant(std::span<const GrowthPoint> points) {
  if (points.size() < 2) throw PreconditionError("estimate_growth_constant: need >= 2 runs");
  std::vector<double> ratios;
  ratios.reserve(points.size());
  for (const GrowthPoint& p : points) {
    if (p.steps == 0 || !(p.time > 0.0)) {
      throw PreconditionError("estimate_growth_constant: run has no positive time");
    }
    ratios.push_back(static_cast<double>(p.steps) / (p.time * p.time));
  }
  GrowthConstantEstimate out;
  out.c2 = mean_of(ratios);
  out.standard_error = std::sqrt(variance_of(ratios) / static_cast<double>(ratios.size()));
  out.count = ratios.size();
  return out;
}

inline GrowthConstantEstimate estimate_growth_constant(std::span<const GrowthTrace> traces) {
  std::vector<GrowthPoint> points;
  points.reserve(traces.size());
  for (const GrowthTrace& t : traces) {
    if (t.times.empty()) throw PreconditionError("estimate_growth_constant: trace without times");
    points.push_back({t.steps(), t.times.back()});
  }
  return estimate_growth_constant(points);
}

// ---------------------------------------------------------------------------
// Tightness

/// max_a of the empirical mass of [a, a + window]; exact for the empirical measure.
inline double tightness_scan(std::span<const double> samples, double window) {
  if (std::isnan(window) || window < 0.0) {
    throw PreconditionError("tightness_scan: window must be >= 0");
  }
  if (samples.size() < 100) throw PreconditionError("tightness_scan: need >= 100 samples");
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  std::size_t best = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (j < i) j = i;
    while (j < v.size() && v[j] <= v[i] + window) ++j;
    best = std::max(best, j - i);
  }
  return static_cast<double>(best) / static_cast<double>(v.size());
}

inline double tightness_scan(const SampleSet& samples, double window) {
  return tightness_scan(samples.values(), window);
}

// ---------------------------------------------------------------------------
// Distribution tests

/// Asymptotic Kolmogorov constant c(alpha) at alpha = 0.001.
inline constexpr double kKsCoefficient001 = 1.9495;

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;  // rejection threshold at significance 0.001
  bool passed() const noexcept { return statistic < critical; }
};

inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return {d, kKsCoefficient001 * std::sqrt((n + m) / (n * m))};
}

inline KsResult ks_two_sample(const SampleSet& a, const SampleSet& b) {
  return ks_two_sample(a.values(), b.values());
}

/// One-sample KS against a continuous CDF.
template <class Cdf>
KsResult ks_one_sample(std::span<const double> values, Cdf&& cdf) {
  if (values.empty()) throw PreconditionError("ks_one_sample: empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return {d, kKsCoefficient001 / std::sqrt(n)};
}

inline double standard_normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double exponential_cdf(double x, double mean = 1.0) noexcept {
  return x <= 0.0 ? 0.0 : -std::expm1(-x / mean);
}

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t degrees_of_freedom = 0;
  double critical = 0.0;  // 0.999 quantile
  bool passed() const noexcept { return statistic < critical; }
};

/// Chi-square test that two count vectors over the same categories come
/// from one distribution (2 x K contingency table; empty categories dropped).
inline ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> a,
                                              std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) throw PreconditionError("chi_square_homogeneity: size mismatch");
  const double na = std::accumulate(a.begin(), a.end(), 0.0);
  const double nb = std::accumulate(b.begin(), b.end(), 0.0);
  if (!(na > 0.0) || !(nb > 0.0)) throw PreconditionError("chi_square_homogeneity: empty table");
  double stat = 0.0;
  std::size_t categories = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double total = static_cast<double>(a[k]) + static_cast<double>(b[k]);
    if (total == 0.0) continue;
    ++categories;
    const double ea = total * na / (na + nb);
    const double eb = total * nb / (na + nb);
    stat += (static_cast<double>(a[k]) - ea) * (static_cast<double>(a[k]) - ea) / ea;
    stat += (static_cast<double>(b[k]) - eb) * (static_cast<double>(b[k]) - eb) / eb;
  }
  if (categories < 2) throw PreconditionError("chi_square_homogeneity: fewer than 2 categories");
  ChiSquareResult r;
  r.statistic = stat;
  r.degrees_of_freedom = categories - 1;
  r.critical = boost::math::quantile(
      boost::math::chi_squared(static_cast<double>(r.degrees_of_freedom)), 0.999);
  return r;
}

/// Resamples T* = sum_j Exp(mean 1/Y_j) on a fixed boundary sequence,
/// standardizes by the conditional moments and KS-tests against N(0,1).
inline KsResult clt_conditional_check(std::span<const std::uint32_t> y_counts,
                                      std::size_t replicates, RngStream& r) {
  if (y_counts.size() < 1000) {
    throw PreconditionError("clt_conditional_check: need a boundary sequence of length >= 1000");
  }
  if (replicates < 1) throw PreconditionError("clt_conditional_check: replicates must be >= 1");
  const ConditionalMoments m = conditional_moments(y_counts);
  const double mu = m.mu.back();
  const double sigma = std::sqrt(m.sigma_sq.back());
  std::vector<double> rates(y_counts.begin(), y_counts.end());
  std::vector<double> z(replicates);
  for (std::size_t k = 0; k < replicates; ++k) {
    double t = 0.0;
    for (double rate : rates) t += sample_exponential_rate(r, rate);
    z[k] = (t - mu) / sigma;
  }
  return ks_one_sample(z, standard_normal_cdf);
}

// ---------------------------------------------------------------------------
// Scaling fits

enum class ScalingModel { log_law, power_law };

struct ScalePoint {
  double scale = 0.0;
  double statistic = 0.0;
};

struct ScalingFit {
  ScalingModel model = ScalingModel::log_law;
  double slope = 0.0;      // C (log law) or beta (power law)
  double intercept = 0.0;  // D (log law) or log A (power law)
  double residual = 0.0;   // RMS residual in the transformed coordinates
  std::vector<ScalePoint> points;

  /// A for the power law y = A x^beta.
  double amplitude() const noexcept { return std::exp(intercept); }
};

/// RMS residual of (slope, intercept) for the given model in transformed coordinates.
inline double scaling_residual(std::span<const ScalePoint> points, ScalingModel model,
                               double slope, double intercept) {
  double ss = 0.0;
  for (const ScalePoint& p : points) {
    const double x = std::log(p.scale);
    const double y = model == ScalingModel::log_law ? p.statistic : std::log(p.statistic);
    const double e = y - (slope * x + intercept);
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(points.size()));
}

/// Least squares: y = C log x + D (semi-log) or log y = beta log x + log A (log-log).
inline ScalingFit fit_scaling(std::span<const ScalePoint> points, ScalingModel model) {
  if (points.size() < 4) throw PreconditionError("fit_scaling: need >= 4 scales");
  double sx = 0, sy = 0;
  for (const ScalePoint& p : points) {
    if (!(p.scale > 0.0)) throw PreconditionError("fit_scaling: scales must be positive");
    if (model == ScalingModel::power_law && !(p.statistic > 0.0)) {
      throw PreconditionError("fit_scaling: power law needs positive statistics");
    }
    sx += std::log(p.scale);
    sy += model == ScalingModel::log_law ? p.statistic : std::log(p.statistic);
  }
  const auto k = static_cast<double>(points.size());
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0, sxy = 0;
  for (const ScalePoint& p : points) {
    const double dx = std::log(p.scale) - mx;
    const double y = model == ScalingModel::log_law ? p.statistic : std::log(p.statistic);
    sxx += dx * dx;
    sxy += dx * (y - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("fit_scaling: scales must not all coincide");
  ScalingFit fit;
  fit.model = model;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.residual = scaling_residual(points, model, fit.slope, fit.intercept);
  fit.points.assign(points.begin(), points.end());
  return fit;
}

struct BootstrapSlope {
  double estimate = 0.0;     // C fitted to the observed variances
  double lower_bound = 0.0;  // the (1-level) quantile of the bootstrap distribution of C
  std::size_t resamples = 0;
};

/// Percentile bootstrap for the log-law slope of the sample variance against
/// scale. When every scale has the same number of samples, replicate indices
/// are resampled jointly across scales (runs that share a replicate are
/// treated as one unit); otherwise each scale is resampled independently.
inline BootstrapSlope bootstrap_variance_log_slope(std::span<const SampleSet> sets,
                                                   std::size_t resamples, double level,
                                                   RngStream& r) {
  if (sets.size() < 4) throw PreconditionError("bootstrap_variance_log_slope: need >= 4 scales");
  if (resamples < 10) throw PreconditionError("bootstrap_variance_log_slope: too few resamples");
  if (!(level > 0.0 && level < 1.0)) throw PreconditionError("bootstrap: level outside (0,1)");
  std::vector<ScalePoint> pts;
  for (const SampleSet& s : sets) {
    if (s.size() < 2) throw PreconditionError("bootstrap_variance_log_slope: scale with < 2 samples");
    pts.push_back({static_cast<double>(s.n_label()), s.summary().variance});
  }
  BootstrapSlope out;
  out.estimate = fit_scaling(pts, ScalingModel::log_law).slope;
  out.resamples = resamples;

  bool paired = true;
  for (const SampleSet& s : sets) paired = paired && s.size() == sets[0].size();

  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<std::size_t> idx;
  std::vector<double> draw;
  for (std::size_t b = 0; b < resamples; ++b) {
    if (paired) {
      idx.resize(sets[0].size());
      for (auto& i : idx) i = static_cast<std::size_t>(r.uniform_index(idx.size()));
    }
    for (std::size_t k = 0; k < sets.size(); ++k) {
      const auto vals = sets[k].values();
      if (!paired) {
        idx.resize(vals.size());
        for (auto& i : idx) i = static_cast<std::size_t>(r.uniform_index(vals.size()));
      }
      draw.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) draw[i] = vals[idx[i]];
      pts[k].statistic = variance_of(draw);
    }
    slopes.push_back(fit_scaling(pts, ScalingModel::log_law).slope);
  }
  out.lower_bound = quantile(slopes, 1.0 - level);
  return out;
}

}  // namespace fpp
