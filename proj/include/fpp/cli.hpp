#pragma once

// Experiment front end: flag parsing, the replicate farm, and CSV/JSON
// emission. Every command is a pure function of its ExperimentSpec; the
// worker count changes scheduling only, never output bytes.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpp/analysis.hpp"
#include "fpp/engines.hpp"
#include "fpp/errors.hpp"
#include "fpp/lattice.hpp"
#include "fpp/rng.hpp"

namespace fpp::cli {

inline constexpr const char* kVersion = "1.0.0";

enum class ExitCode : int { ok = 0, failure = 1, check_failed = 2 };

/// Bad flags or flag values.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// --help or --version was given; text holds what should be printed.
class HelpRequested : public std::runtime_error {
 public:
  explicit HelpRequested(std::string text) : std::runtime_error("help"), text_(std::move(text)) {}
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { csv, json };

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"hit",    "grow",            "variance-scan",
                                                 "shape",  "lemma2",          "strip",
                                                 "engines-compare", "clt-check"};
  return names;
}

struct ExperimentSpec {
  std::string command;
  SimConfig config;
  std::string direction_text = "1,0";
  bool n_given = false;
  std::vector<std::int64_t> scales;
  std::string scales_text;
  double window = 0.5;
  std::uint64_t fuzz = 10000;
  std::optional<std::string> output_path;  // stdout when absent
  OutputFormat format = OutputFormat::csv;
  unsigned workers = 1;
};

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1U : hw;
}

inline std::string default_scales(const std::string& command) {
  if (command == "shape") return "50,100,200";
  return "16,32,64,128,256,512";
}

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest-safe round-trip form: 17 significant digits.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("malformed number '" + s + "'");
  }
  if (used != s.size()) throw UsageError("malformed number '" + s + "'");
  return v;
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

inline UnitVector parse_direction(const std::string& s) {
  const auto parts = split_commas(s);
  if (parts.size() != 2) throw UsageError("--direction expects dx,dy; got '" + s + "'");
  const double dx = parse_double(parts[0]);
  const double dy = parse_double(parts[1]);
  if (!std::isfinite(dx) || !std::isfinite(dy) || (dx == 0.0 && dy == 0.0)) {
    throw UsageError("--direction must be a finite nonzero vector");
  }
  return normalized(dx, dy);
}

inline std::vector<std::int64_t> parse_scales(const std::string& s) {
  std::vector<std::int64_t> out;
  for (const std::string& part : split_commas(s)) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
      throw UsageError("malformed scale '" + part + "' in --scales");
    }
    if (used != part.size() || v < 1) throw UsageError("malformed scale '" + part + "' in --scales");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--scales is empty");
  return out;
}

// ---------------------------------------------------------------------------
// Argument parsing

inline ExperimentSpec parse_args(const std::vector<std::string>& args) {
  CLI::App app{"First-passage percolation laboratory on the square lattice", "fpp"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);

  ExperimentSpec spec;
  std::uint64_t seed = 1;
  std::uint64_t replicates = 1000;
  std::int64_t n = 0;
  std::string engine = "eden";
  std::string clock = "exponential";
  std::optional<double> alpha;
  double strip_constant = 2.0;
  std::optional<std::uint64_t> max_steps;
  std::string direction = "1,0";
  std::string scales;
  double window = 0.5;
  std::string out;
  std::string format = "csv";
  bool retain = false;
  unsigned workers = default_workers();
  std::uint64_t fuzz = 10000;

  const std::map<std::string, std::string> descriptions = {
      {"hit", "passage time T(0, v^(n)) and hit index M(n) per replicate"},
      {"grow", "run --n growth steps per replicate; reports T(V_n), mu_n, sigma_n^2"},
      {"variance-scan", "hit runs over --scales with variance, tightness and scaling fits"},
      {"shape", "time constant c1, growth constant c2 and the M(n)/n^2 cross-check"},
      {"lemma2", "deterministic sequence-inequality checks with random fuzzing"},
      {"strip", "strip-restricted runs (--alpha) against unrestricted runs"},
      {"engines-compare", "pairwise KS comparison of the Eden, Dijkstra and Richardson engines"},
      {"clt-check", "conditional normality of T given a fixed Eden boundary sequence"},
  };

  for (const std::string& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    sub->add_option("--seed", seed, "master seed")->capture_default_str();
    sub->add_option("--replicates", replicates, "independent replicates")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--n", n, "target index or step count")->check(CLI::PositiveNumber);
    sub->add_option("--direction", direction, "direction dx,dy (normalized internally)")
        ->capture_default_str();
    sub->add_option("--engine", engine, "eden|dijkstra|richardson")
        ->capture_default_str()
        ->check(CLI::IsMember({"eden", "dijkstra", "richardson"}));
    sub->add_option("--clock", clock, "exponential|uniform|deterministic (richardson)")
        ->capture_default_str()
        ->check(CLI::IsMember({"exponential", "uniform", "deterministic"}));
    sub->add_option("--alpha", alpha, "strip exponent in (0,1)");
    sub->add_option("--strip-constant", strip_constant, "strip width multiplier")
        ->capture_default_str();
    sub->add_option("--max-steps", max_steps, "step cap per run (default 8 n^2 + 10^4)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--scales", scales, "comma list of scales")->default_str(default_scales(name));
    sub->add_option("--window", window, "tightness window width")->capture_default_str();
    sub->add_option("--out", out, "output path (default stdout)");
    sub->add_option("--format", format, "csv|json")
        ->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--retain-trace", retain, "write full traces to <out>.trace.csv");
    sub->add_option("--workers", workers, "worker threads (does not affect output)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    if (name == "lemma2") {
      sub->add_option("--fuzz", fuzz, "random constrained sequences")->capture_default_str();
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream o, err;
    app.exit(e, o, err);
    throw HelpRequested(o.str());
  } catch (const CLI::CallForAllHelp& e) {
    std::ostringstream o, err;
    app.exit(e, o, err);
    throw HelpRequested(o.str());
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested(std::string(kVersion) + "\n");
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  for (CLI::App* sub : app.get_subcommands()) spec.command = sub->get_name();
  CLI::App* sub = app.get_subcommand(spec.command);

  spec.n_given = sub->count("--n") > 0;
  spec.config.n = spec.n_given ? n : 1;
  spec.config.master_seed = seed;
  spec.config.replicates = replicates;
  spec.config.engine = *parse_engine(engine);
  spec.config.clock = *parse_clock(clock);
  spec.config.strip_alpha = alpha;
  spec.config.strip_constant = strip_constant;
  spec.config.max_steps = max_steps;
  spec.config.retain_trace = retain;
  spec.direction_text = direction;
  spec.config.direction = parse_direction(direction);
  spec.scales_text = sub->count("--scales") > 0 ? scales : default_scales(spec.command);
  spec.scales = parse_scales(spec.scales_text);
  spec.window = window;
  spec.fuzz = fuzz;
  if (!out.empty()) spec.output_path = out;
  spec.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
  spec.workers = workers;

  const bool needs_n = spec.command == "hit" || spec.command == "grow" ||
                       spec.command == "strip" || spec.command == "engines-compare" ||
                       spec.command == "clt-check";
  if (needs_n && !spec.n_given) throw UsageError("--n is required for " + spec.command);
  if (spec.command == "strip" && !alpha) throw UsageError("--alpha is required for strip");
  if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
  if (!(strip_constant > 0.0)) throw UsageError("--strip-constant must be positive");
  if (std::isnan(window) || window < 0.0) throw UsageError("--window must be >= 0");
  if (retain && !spec.output_path) throw UsageError("--retain-trace requires --out");
  return spec;
}

inline ExperimentSpec parse_args(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_args(args);
}

// ---------------------------------------------------------------------------
// Replicate farm

/// Calls fn(i) for i in [0, count) on up to `workers` threads; results are
/// stored by index. If any call throws, the exception of the smallest
/// failing index is rethrown after all workers stop.
template <class Fn>
auto farm(std::size_t count, unsigned workers, Fn&& fn) {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    // An index, once fetched, always runs; every smaller index was fetched
    // earlier, so the smallest failing index is always observed.
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1U, workers), count));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Stream id for replicate r of sub-experiment k (k = 0 is the plain replicate id).
inline std::uint64_t stream_for(std::uint64_t k, std::uint64_t r) noexcept { return (k << 40) | r; }

// ---------------------------------------------------------------------------
// Report model

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Report {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<Table> tables;
  std::vector<std::pair<std::string, Cell>> fits;
  bool check_failed = false;
};

inline const std::vector<std::string>& hit_columns() {
  static const std::vector<std::string> c = {"command", "seed", "engine", "n", "replicate",
                                             "T",       "M_n",  "mu_Mn",  "sigma2_Mn"};
  return c;
}

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> c = {"n",      "mean_T",          "var_T",  "median_T",
                                             "max_window_mass", "c1_hat", "c2_hat",
                                             "lemma1_ratio_p5"};
  return c;
}

inline const std::vector<std::string>& check_columns() {
  static const std::vector<std::string> c = {"check", "statistic", "threshold", "passed"};
  return c;
}

inline std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<V, std::string>) {
          return v;
        } else {
          return std::to_string(v);
        }
      },
      c);
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, double>) {
          if (!std::isfinite(v)) return format_double(v);
          return v;
        } else {
          return v;
        }
      },
      c);
}

inline std::string render_csv(const Report& report) {
  std::string out;
  for (const auto& [k, v] : report.meta) out += "# " + k + "=" + v + "\n";
  for (const Table& t : report.tables) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      out += (i ? "," : "") + t.columns[i];
    }
    out += "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
      out += "\n";
    }
  }
  for (const auto& [k, v] : report.fits) out += "# " + k + "=" + cell_text(v) + "\n";
  return out;
}

inline std::string render_json(const Report& report) {
  nlohmann::ordered_json doc;
  doc["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.meta) doc["meta"][k] = v;
  for (const Table& t : report.tables) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json obj = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
      arr.push_back(std::move(obj));
    }
    doc[t.name] = std::move(arr);
  }
  doc["fits"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.fits) doc["fits"][k] = cell_json(v);
  return doc.dump(2) + "\n";
}

inline std::string render(const Report& report, OutputFormat format) {
  return format == OutputFormat::json ? render_json(report) : render_csv(report);
}

/// Self-describing header: every setting that affects the output.
inline std::vector<std::pair<std::string, std::string>> describe(const ExperimentSpec& s) {
  const SimConfig& c = s.config;
  std::vector<std::pair<std::string, std::string>> m = {
      {"artifact", "fpp"},
      {"version", kVersion},
      {"command", s.command},
      {"seed", std::to_string(c.master_seed)},
      {"replicates", std::to_string(c.replicates)},
      {"n", s.n_given ? std::to_string(c.n) : "unset"},
      {"direction", s.direction_text},
      {"direction_normalized", format_double(c.direction.x) + "," + format_double(c.direction.y)},
      {"engine", std::string(to_string(c.engine))},
      {"clock", std::string(to_string(c.clock))},
      {"alpha", c.strip_alpha ? format_double(*c.strip_alpha) : "unset"},
      {"strip_constant", format_double(c.strip_constant)},
      {"max_steps", c.max_steps ? std::to_string(*c.max_steps) : "default"},
      {"scales", s.scales_text},
      {"window", format_double(s.window)},
      {"format", s.format == OutputFormat::json ? "json" : "csv"},
      {"retain_trace", c.retain_trace ? "true" : "false"},
  };
  if (s.command == "lemma2") m.emplace_back("fuzz", std::to_string(s.fuzz));
  return m;
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

struct Labeled {
  std::string engine;
  std::int64_t n;
  std::uint64_t replicate;
  HitResult result;
};

inline std::vector<Cell> hit_row(const ExperimentSpec& s, const Labeled& h) {
  return {s.command,
          s.config.master_seed,
          h.engine,
          h.n,
          h.replicate,
          h.result.passage_time,
          h.result.hit_index,
          h.result.mu,
          h.result.sigma_sq};
}

inline std::string engine_label(const SimConfig& c) {
  std::string label(to_string(c.engine));
  if (c.engine == EngineKind::richardson && c.clock != ClockKind::exponential) {
    label += "-" + std::string(to_string(c.clock));
  }
  if (c.strip_alpha) label += "-strip";
  return label;
}

/// Hit runs of `config` for every replicate; sub-experiment k picks the stream family.
inline std::vector<HitResult> run_hits(const SimConfig& config, std::uint64_t k, unsigned workers) {
  return farm(config.replicates, workers, [&](std::size_t r) {
    RngStream rng(config.master_seed, stream_for(k, r));
    return run_engine(config, rng);
  });
}

inline std::vector<HitResult> run_grows(const SimConfig& config, unsigned workers) {
  return farm(config.replicates, workers, [&](std::size_t r) {
    RngStream rng(config.master_seed, stream_for(0, r));
    return grow(config.engine, config.clock, static_cast<std::uint64_t>(config.n), rng,
                config.retain_trace);
  });
}

inline SampleSet times_of(const std::vector<HitResult>& hits, std::int64_t n, ClockKind model) {
  std::vector<double> v;
  v.reserve(hits.size());
  for (const auto& h : hits) v.push_back(h.passage_time);
  return SampleSet(std::move(v), n, model);
}

inline ClockKind model_of(const SimConfig& c) {
  return c.engine == EngineKind::richardson ? c.clock : ClockKind::exponential;
}

/// One summary row for hit results at scale n.
inline std::vector<Cell> summary_row(const std::vector<HitResult>& hits, std::int64_t n,
                                     double window) {
  const SampleSet set = times_of(hits, n, ClockKind::exponential);
  std::vector<double> ratios;
  std::vector<double> lemma1;
  for (const auto& h : hits) {
    ratios.push_back(static_cast<double>(h.hit_index) / (h.passage_time * h.passage_time));
    if (h.hit_index >= 2) lemma1.push_back(h.sigma_sq / std::log(static_cast<double>(h.hit_index)));
  }
  const double mass = set.size() >= 100 ? tightness_scan(set, window)
                                        : std::numeric_limits<double>::quiet_NaN();
  const double p5 = lemma1.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : quantile(lemma1, 0.05);
  return {n,
          set.summary().mean,
          set.summary().variance,
          set.summary().median,
          mass,
          set.summary().mean / static_cast<double>(n),
          mean_of(ratios),
          p5};
}

inline void write_traces(const std::string& path, const std::vector<const HitResult*>& hits) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "replicate,j,x,y,Y,T\n";
  for (std::size_t r = 0; r < hits.size(); ++r) {
    if (!hits[r]->trace) continue;
    const GrowthTrace& t = *hits[r]->trace;
    for (std::size_t j = 0; j < t.vertices.size(); ++j) {
      f << r << ',' << j << ',' << t.vertices[j].x << ',' << t.vertices[j].y << ',';
      if (j > 0) f << t.y_counts[j - 1];
      f << ',' << format_double(t.times[j]) << '\n';
    }
  }
  if (!f) throw IoError("write failed for " + path);
}

inline void maybe_write_traces(const ExperimentSpec& s, const std::vector<HitResult>& hits) {
  if (!s.config.retain_trace || !s.output_path) return;
  std::vector<const HitResult*> ptrs;
  for (const auto& h : hits) ptrs.push_back(&h);
  write_traces(*s.output_path + ".trace.csv", ptrs);
}

inline void add_check(Table& t, bool& failed, const std::string& name, double stat,
                      double threshold, bool passed) {
  t.rows.push_back({name, stat, threshold, std::string(passed ? "true" : "false")});
  if (!passed) failed = true;
}

inline Report cmd_hit(const ExperimentSpec& s) {
  Report rep;
  rep.meta = describe(s);
  const auto hits = run_hits(s.config, 0, s.workers);
  Table rows{"rows", hit_columns(), {}};
  const std::string label = engine_label(s.config);
  for (std::size_t r = 0; r < hits.size(); ++r) {
    rows.rows.push_back(hit_row(s, {label, s.config.n, r, hits[r]}));
  }
  rep.tables.push_back(std::move(rows));
  maybe_write_traces(s, hits);
  return rep;
}

inline Report cmd_grow(const ExperimentSpec& s) {
  Report rep;
  rep.meta = describe(s);
  const auto runs = run_grows(s.config, s.workers);
  Table rows{"rows", hit_columns(), {}};
  const std::string label = engine_label(s.config);
  std::vector<GrowthPoint> points;
  std::vector<double> lemma1;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    rows.rows.push_back(hit_row(s, {label, s.config.n, r, runs[r]}));
    points.push_back({runs[r].hit_index, runs[r].passage_time});
    if (runs[r].hit_index >= 2) {
      lemma1.push_back(runs[r].sigma_sq / std::log(static_cast<double>(runs[r].hit_index)));
    }
  }
  rep.tables.push_back(std::move(rows));
  if (points.size() >= 2 && detail::model_of(s.config) == ClockKind::exponential) {
    const auto c2 = estimate_growth_constant(points);
    rep.fits.emplace_back("c2_hat", c2.c2);
    rep.fits.emplace_back("c2_se", c2.standard_error);
  }
  if (!lemma1.empty()) rep.fits.emplace_back("lemma1_ratio_p5", quantile(lemma1, 0.05));
  maybe_write_traces(s, runs);
  return rep;
}

inline Report cmd_variance_scan(const ExperimentSpec& s) {
  Report rep;
  rep.meta = describe(s);
  Table rows{"rows", hit_columns(), {}};
  Table summary{"summary", summary_columns(), {}};
  std::vector<ScalePoint> var_points;
  const std::string label = engine_label(s.config);
  for (std::size_t k = 0; k < s.scales.size(); ++k) {
    SimConfig c = s.config;
    c.n = s.scales[k];
    c.retain_trace = false;
    const auto hits = run_hits(c, k, s.workers);
    for (std::size_t r = 0; r < hits.size(); ++r) {
      rows.rows.push_back(hit_row(s, {label, c.n, r, hits[r]}));
    }
    summary.rows.push_back(summary_row(hits, c.n, s.window));
    var_points.push_back({static_cast<double>(c.n), std::get<double>(summary.rows.back()[2])});
  }
  rep.tables.push_back(std::move(rows));
  rep.tables.push_back(std::move(summary));
  if (var_points.size() >= 4) {
    const auto log_fit = fit_scaling(var_points, ScalingModel::log_law);
    rep.fits.emplace_back("log_law_C", log_fit.slope);
    rep.fits.emplace_back("log_law_D", log_fit.intercept);
    rep.fits.emplace_back("log_law_residual", log_fit.residual);
    bool positive = true;
    for (const auto& p : var_points) positive = positive && p.statistic > 0.0;
    if (positive) {
      const auto pow_fit = fit_scaling(var_points, ScalingModel::power_law);
      rep.fits.emplace_back("power_law_beta_exploratory", pow_fit.slope);
      rep.fits.emplace_back("power_law_A_exploratory", pow_fit.amplitude());
      rep.fits.emplace_back("power_law_residual", pow_fit.residual);
    }
  }
  return rep;
}

inline Report cmd_shape(const ExperimentSpec& s) {
  Report rep;
  rep.meta = describe(s);
  if (s.scales.size() < 3) throw PreconditionError("shape needs at least 3 scales");
  Table summary{"summary", summary_columns(), {}};
  std::vector<SampleSet> sets;
  std::vector<HitResult> largest;
  std::int64_t largest_n = 0;
  for (std::size_t k = 0; k < s.scales.size(); ++k) {
    SimConfig c = s.config;
    c.n = s.scales[k];
    c.retain_trace = false;
    auto hits = run_hits(c, k, s.workers);
    summary.rows.push_back(summary_row(hits, c.n, s.window));
    sets.push_back(times_of(hits, c.n, model_of(c)));
    if (c.n > largest_n) {
      largest_n = c.n;
      largest = std::move(hits);
    }
  }
  rep.tables.push_back(std::move(summary));
  const auto c1 = estimate_time_constant(sets, s.config.direction);
  std::vector<GrowthPoint> points;
  std::vector<double> m_over_n2;
  for (const auto& h : largest) {
    points.push_back({h.hit_index, h.passage_time});
    m_over_n2.push_back(static_cast<double>(h.hit_index) /
                        (static_cast<double>(largest_n) * static_cast<double>(largest_n)));
  }
  const auto c2 = estimate_growth_constant(points);
  const double predicted = c2.c2 * c1.c1 * c1.c1;
  const double observed = mean_of(m_over_n2);
  rep.fits.emplace_back("c1_hat", c1.c1);
  rep.fits.emplace_back("c1_se", c1.standard_error);
  rep.fits.emplace_back("c1_scale", c1.scale);
  rep.fits.emplace_back("c1_extrapolated_affine_in_1_over_n", c1.extrapolated);
  rep.fits.emplace_back("c2_hat", c2.c2);
  rep.fits.emplace_back("c2_se", c2.standard_error);
  rep.fits.emplace_back("M_over_n2_mean", observed);
  rep.fits.emplace_back("c2_c1_squared", predicted);
  rep.fits.emplace_back("relative_gap", std::abs(observed - predicted) / predicted);
  return rep;
}

inline Report cmd_lemma2(const ExperimentSpec& s) {
  Report rep;
  rep.meta = describe(s);
  Table checks{"checks", check_columns(), {}};
  RngStream rng(s.config.master_seed, stream_for(0, 0));

  std::uint64_t violations = 0;
  std::uint64_t log_violations = 0;
  double worst_parts = 0.0;
  std::vector<double> xs;
  for (std::uint64_t t = 0; t < s.fuzz; ++t) {
    const std::size_t len = 2 + static_cast<std::size_t>(rng.uniform_index(199));
    xs.resize(len);
    for (double& x : xs) x = rng.uniform01();
    const double a = tightest_root_constant(xs);
    const Lemma2Report r = lemma2_check(xs, a);
    if (!r.holds) ++violations;
    if (!r.log_bound_holds) ++log_violations;
    const auto dec = rearrange_decreasing(xs);
    CompensatedSum direct;
    for (double x : dec) direct.add(x * x);
    const double rel = std::abs(sum_squares_by_parts(dec) - direct.value()) / direct.value();
    worst_parts = std::max(worst_parts, rel);
  }
  bool failed = false;
  add_check(checks, failed, "fuzz_violations", static_cast<double>(violations), 0.0,
            violations == 0);
  add_check(checks, failed, "fuzz_log_bound_violations", static_cast<double>(log_violations), 0.0,
            log_violations == 0);
  add_check(checks, failed, "summation_by_parts_max_rel_error", worst_parts, 1e-10,
            worst_parts <= 1e-10);

  const auto q = q_sequence(1000);
  std::vector<double> extremal(q.size());
  const double a = 1.5;
  for (std::size_t j = 0; j < q.size(); ++j) extremal[j] = a * q[j];
  const Lemma2Report eq = lemma2_check(extremal, a);
  const double eq_rel = std::abs(eq.margin) / eq.sum_squares;
  add_check(checks, failed, "equality_case_rel_margin", eq_rel, 1e-12, eq_rel <= 1e-12);

  const auto qs = q_square_bound_check(1'000'000);
  add_check(checks, failed, "q_square_bound_first_failure",
            static_cast<double>(qs.first_failure.value_or(0)), 0.0, !qs.first_failure);
  const double tele = std::abs(qs.sum_q - 1000.0);
  add_check(checks, failed, "telescoping_abs_error", tele, 1e-9, tele < 1e-9);

  rep.tables.push_back(std::move(checks));
  rep.check_failed = failed;
  return rep;
}

inline Report cmd_strip(const ExperimentSpec& s) {
  Report rep;
  rep.meta = describe(s);
  SimConfig strip = s.config;
  SimConfig free = s.config;
  free.strip_alpha.reset();
  const auto restricted = run_hits(strip, 1, s.workers);
  const auto unrestricted = run_hits(free, 0, s.workers);
  Table rows{"rows", hit_columns(), {}};
  const std::string strip_label = engine_label(strip);
  const std::string free_label = engine_label(free);
  std::size_t cs_ok = 0;
  for (std::size_t r = 0; r < restricted.size(); ++r) {
    rows.rows.push_back(hit_row(s, {strip_label, s.config.n, r, restricted[r]}));
    const auto& h = restricted[r];
    if (h.sigma_sq * static_cast<double>(h.hit_index) >= h.mu * h.mu * (1.0 - 1e-12)) ++cs_ok;
  }
  for (std::size_t r = 0; r < unrestricted.size(); ++r) {
    rows.rows.push_back(hit_row(s, {free_label, s.config.n, r, unrestricted[r]}));
  }
  rep.tables.push_back(std::move(rows));

  const SampleSet a = times_of(restricted, s.config.n, model_of(strip));
  const SampleSet b = times_of(unrestricted, s.config.n, model_of(free));
  const KsResult ks = ks_two_sample(a, b);
  double m_strip = 0.0;
  double m_free = 0.0;
  for (const auto& h : restricted) m_strip += static_cast<double>(h.hit_index);
  for (const auto& h : unrestricted) m_free += static_cast<double>(h.hit_index);
  m_strip /= static_cast<double>(restricted.size());
  m_free /= static_cast<double>(unrestricted.size());
  rep.fits.emplace_back("strip_half_width", strip.strip_half_width());
  rep.fits.emplace_back("ks_strip_vs_free", ks.statistic);
  rep.fits.emplace_back("ks_critical_0.001", ks.critical);
  rep.fits.emplace_back("cauchy_schwarz_fraction",
                        static_cast<double>(cs_ok) / static_cast<double>(restricted.size()));
  rep.fits.emplace_back("mean_T_strip", a.summary().mean);
  rep.fits.emplace_back("mean_T_free", b.summary().mean);
  rep.fits.emplace_back("mean_M_strip", m_strip);
  rep.fits.emplace_back("mean_M_free", m_free);
  maybe_write_traces(s, restricted);
  return rep;
}

inline Report cmd_engines_compare(const ExperimentSpec& s) {
  Report rep;
  rep.meta = describe(s);
  std::vector<SimConfig> configs(3, s.config);
  configs[0].engine = EngineKind::eden;
  configs[1].engine = EngineKind::dijkstra;
  configs[2].engine = EngineKind::richardson;
  for (auto& c : configs) {
    c.clock = ClockKind::exponential;
    c.retain_trace = false;
  }
  std::vector<std::vector<HitResult>> results;
  Table rows{"rows", hit_columns(), {}};
  for (std::size_t k = 0; k < configs.size(); ++k) {
    results.push_back(run_hits(configs[k], k, s.workers));
    const std::string label = engine_label(configs[k]);
    for (std::size_t r = 0; r < results[k].size(); ++r) {
      rows.rows.push_back(hit_row(s, {label, s.config.n, r, results[k][r]}));
    }
  }
  Table checks{"checks", check_columns(), {}};
  bool failed = false;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (std::size_t j = i + 1; j < configs.size(); ++j) {
      const KsResult ks = ks_two_sample(times_of(results[i], s.config.n, ClockKind::exponential),
                                        times_of(results[j], s.config.n, ClockKind::exponential));
      add_check(checks, failed,
                "ks_" + engine_label(configs[i]) + "_vs_" + engine_label(configs[j]),
                ks.statistic, ks.critical, ks.passed());
    }
  }
  rep.tables.push_back(std::move(rows));
  rep.tables.push_back(std::move(checks));
  rep.check_failed = failed;
  return rep;
}

inline Report cmd_clt_check(const ExperimentSpec& s) {
  Report rep;
  rep.meta = describe(s);
  RngStream growth_rng(s.config.master_seed, stream_for(0, 0));
  const HitResult run = grow(EngineKind::eden, ClockKind::exponential,
                             static_cast<std::uint64_t>(s.config.n), growth_rng, true);
  RngStream resample_rng(s.config.master_seed, stream_for(1, 0));
  const KsResult ks = clt_conditional_check(run.trace->y_counts, s.config.replicates, resample_rng);
  Table checks{"checks", check_columns(), {}};
  bool failed = false;
  add_check(checks, failed, "ks_standardized_vs_normal", ks.statistic, ks.critical, ks.passed());
  rep.tables.push_back(std::move(checks));
  rep.fits.emplace_back("mu_n", run.mu);
  rep.fits.emplace_back("sigma2_n", run.sigma_sq);
  rep.check_failed = failed;
  return rep;
}

}  // namespace detail

/// Runs the command and builds its report without writing anything but trace sidecars.
inline Report execute(const ExperimentSpec& s) {
  if (s.command == "hit") return detail::cmd_hit(s);
  if (s.command == "grow") return detail::cmd_grow(s);
  if (s.command == "variance-scan") return detail::cmd_variance_scan(s);
  if (s.command == "shape") return detail::cmd_shape(s);
  if (s.command == "lemma2") return detail::cmd_lemma2(s);
  if (s.command == "strip") return detail::cmd_strip(s);
  if (s.command == "engines-compare") return detail::cmd_engines_compare(s);
  if (s.command == "clt-check") return detail::cmd_clt_check(s);
  throw UsageError("unknown command '" + s.command + "'");
}

inline void write_output(const std::string& text, const std::optional<std::string>& path,
                         std::ostream& out) {
  if (!path) {
    out << text;
    out.flush();
    if (!out) throw IoError("write to standard output failed");
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f) throw IoError("cannot open " + *path + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write failed for " + *path);
}

inline int exit_code(const Report& report) noexcept {
  return static_cast<int>(report.check_failed ? ExitCode::check_failed : ExitCode::ok);
}

/// Executes and writes; returns the process exit code. Diagnostics go to err.
inline int run_experiment(const ExperimentSpec& s, std::ostream& out, std::ostream& err) {
  try {
    const Report rep = execute(s);
    write_output(render(rep, s.format), s.output_path, out);
    if (rep.check_failed) err << "fpp " << s.command << ": check failed\n";
    return exit_code(rep);
  } catch (const ResourceError& e) {
    err << "fpp " << s.command << ": " << e.what() << "\n";
  } catch (const IoError& e) {
    err << "fpp " << s.command << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "fpp " << s.command << ": " << e.what() << "\n";
  }
  return static_cast<int>(ExitCode::failure);
}

/// Full entry point: parse, run, map every failure to exit code 1.
inline int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec;
  try {
    spec = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.text();
    return static_cast<int>(ExitCode::ok);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::failure);
  } catch (const std::exception& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::failure);
  }
  return run_experiment(spec, out, err);
}

}  // namespace fpp::cli
