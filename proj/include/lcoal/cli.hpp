#pragma once

// Config-driven experiment runner behind the `lcoal` command-line tool.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcoal/chain.hpp"
#include "lcoal/coupling.hpp"
#include "lcoal/invariant.hpp"
#include "lcoal/lambda_measure.hpp"
#include "lcoal/rates.hpp"
#include "lcoal/reference.hpp"
#include "lcoal/reversal.hpp"

namespace lcoal::cli {

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"check",     "rates",  "simulate",  "last-merger", "invariant",
                                                 "reverse",   "couple", "reference", "lattice-scan"};
  return names;
}

/// Failure with a process exit code.
class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3, kPrecondition = 4 };

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int threads = 1;
  bool override_size_guard = false;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named measures accepted in place of an explicit {"kingman", "atoms", "beta"} object.
inline LambdaSpec measure_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "kingman") return LambdaSpec::kingman();
    if (name == "star") return LambdaSpec::star();
    if (name == "bolthausen-sznitman") return LambdaSpec::beta(1.0, 1.0);
    if (name == "eldon-wakeley") return LambdaSpec::eldon_wakeley(std::exp(-1.0));
    throw CliError(kConfig, "config: unknown measure preset '" + name + "'");
  }
  if (j.is_object() && j.contains("eldon_wakeley")) {
    if (j.size() != 1 || !j["eldon_wakeley"].is_number())
      throw CliError(kConfig, "config: 'eldon_wakeley' takes a single number p");
    return LambdaSpec::eldon_wakeley(j["eldon_wakeley"].get<double>());
  }
  if (j.is_object() && j.contains("beta_alpha")) {
    if (j.size() != 1 || !j["beta_alpha"].is_number())
      throw CliError(kConfig, "config: 'beta_alpha' takes a single number alpha");
    return LambdaSpec::beta_alpha(j["beta_alpha"].get<double>());
  }
  try {
    return LambdaSpec::from_json(j);
  } catch (const std::exception& e) {
    throw CliError(kConfig, std::string("config: ") + e.what());
  }
}

/// Typed view of the JSON config. Keys read by a subcommand are recorded so
/// the rest can be reported as unused.
class Config {
 public:
  explicit Config(nlohmann::json j) : j_(std::move(j)) {
    if (!j_.is_object()) throw CliError(kConfig, "config: top level must be a JSON object");
  }

  const nlohmann::json& json() const { return j_; }
  void set(const std::string& key, nlohmann::json value) { j_[key] = std::move(value); }
  bool has(const std::string& key) const { return j_.contains(key); }

  LambdaSpec measure() {
    if (!has("measure")) throw CliError(kConfig, "config: 'measure' is required");
    used_.insert("measure");
    return measure_from_json(j_["measure"]);
  }

  template <class T>
  T get(const std::string& key, std::optional<T> fallback = std::nullopt) {
    used_.insert(key);
    if (!has(key)) {
      if (fallback) return *fallback;
      throw CliError(kConfig, "config: '" + key + "' is required");
    }
    try {
      return j_[key].get<T>();
    } catch (const std::exception&) {
      throw CliError(kConfig, "config: '" + key + "' has the wrong type");
    }
  }

  std::uint64_t seed() {
    used_.insert("seed");
    if (!has("seed")) return 0;
    const auto& v = j_["seed"];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw CliError(kConfig, "config: 'seed' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, _] : j_.items())
      if (!used_.count(key) && key != "output_dir") out.push_back(key);
    return out;
  }

 private:
  nlohmann::json j_;
  std::set<std::string> used_;
};

inline std::string fmt_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// CSV file with a `#` comment header identifying config and seed.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& subcommand, std::uint64_t config_hash,
            std::uint64_t seed)
      : out_(path) {
    if (!out_) throw CliError(kFailure, "cannot open " + path.string() + " for writing");
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, config_hash);
    out_ << "# lcoal " << subcommand << "\n# config_hash: " << hash << "\n# seed: " << seed << "\n";
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << "\r\n";
  }

 private:
  static std::string cell(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  static std::string cell(const char* s) { return cell(std::string(s)); }
  static std::string cell(double x) { return fmt_real(x); }
  static std::string cell(bool b) { return b ? "true" : "false"; }
  template <class T>
  static std::string cell(T x)
    requires std::is_integral_v<T>
  {
    return std::to_string(x);
  }

  std::ofstream out_;
};

struct LatticeScanRow {
  double lambda;
  int m;
  int n;
  double p_last2;  // P(L_n = 2)
};

struct LatticeSpreadRow {
  int m;
  double min;
  double max;
  double spread;  // max - min across lambda
  double drift;   // max over lambda of |P at m - P at m-1|; nan for the first m
};

struct LatticeScanReport {
  std::vector<LatticeScanRow> rows;  // lambda-major
  std::vector<LatticeSpreadRow> spread;

  double value(double lambda, int m) const {
    for (const auto& r : rows)
      if (r.lambda == lambda && r.m == m) return r.p_last2;
    throw std::out_of_range("lattice scan: no entry");
  }
};

/// Exact P(L_n = 2) along n = round(e^{lambda + m}) for a purely atomic measure.
inline LatticeScanReport lattice_scan(const LambdaSpec& spec, const std::vector<double>& lambda_grid, int m_min,
                                      int m_max, int threads = 1, bool override_size_guard = false) {
  if (!spec.purely_atomic()) throw std::invalid_argument("lattice-scan: measure must be purely atomic");
  if (check_conditions(spec).log_nonlattice == Trichotomy::yes)
    throw std::invalid_argument("lattice-scan: measure is log-nonlattice, nothing to scan");
  if (lambda_grid.empty() || m_min > m_max || m_min < 1)
    throw std::invalid_argument("lattice-scan: need a nonempty lambda grid and 1 <= m_min <= m_max");
  LatticeScanReport rep;
  for (double l : lambda_grid)
    for (int m = m_min; m <= m_max; ++m)
      rep.rows.push_back({l, m, static_cast<int>(std::lround(std::exp(l + m))), 0.0});
  for (const auto& r : rep.rows) check_size_guard(r.n, override_size_guard, "lattice-scan");
  ProfileOptions popt;
  popt.override_size_guard = override_size_guard;
  parallel_for(rep.rows.size(), threads, [&](std::size_t i) {
    auto& r = rep.rows[i];
    r.p_last2 = r.n >= 2 ? absorption_profile(spec, r.n, popt).last_merger(2) : 0.0;
  });
  for (int m = m_min; m <= m_max; ++m) {
    LatticeSpreadRow s{m, kPosInf, kNegInf, 0.0, std::nan("")};
    double drift = 0.0;
    for (double l : lambda_grid) {
      const double v = rep.value(l, m);
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      if (m > m_min) drift = std::max(drift, std::abs(v - rep.value(l, m - 1)));
    }
    s.spread = s.max - s.min;
    if (m > m_min) s.drift = drift;
    rep.spread.push_back(s);
  }
  return rep;
}

namespace detail {

inline std::vector<int> int_list(Config& cfg, const std::string& key) {
  auto v = cfg.get<std::vector<int>>(key);
  if (v.empty()) throw CliError(kConfig, "config: '" + key + "' must be nonempty");
  return v;
}

inline std::vector<int> n_schedule(Config& cfg) {
  if (cfg.has("n_schedule")) return int_list(cfg, "n_schedule");
  return {cfg.get<int>("n")};
}

}  // namespace detail

/// Runs one subcommand on a parsed config. Returns the exit code; messages go to `log`.
inline int run_config(const std::string& subcommand, nlohmann::json config_json, const RunOptions& opts,
                      std::ostream& log) {
  try {
    if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
      throw CliError(kUsage, "unknown subcommand '" + subcommand + "'");
    Config cfg(std::move(config_json));
    if (opts.seed) cfg.set("seed", *opts.seed);
    if (opts.out_dir) cfg.set("output_dir", *opts.out_dir);
    const std::filesystem::path dir = cfg.has("output_dir") ? cfg.json()["output_dir"].get<std::string>() : ".";
    std::filesystem::create_directories(dir);
    // the output location does not change results, so it is left out of the hash
    nlohmann::json hashed = cfg.json();
    hashed.erase("output_dir");
    const std::uint64_t hash = fnv1a(hashed.dump());
    const std::uint64_t seed = cfg.seed();
    const int threads = std::max(1, opts.threads);
    const auto csv = [&](const std::string& name) { return CsvWriter(dir / name, subcommand, hash, seed); };

    if (subcommand == "check") {
      const auto spec = cfg.measure();
      const auto c = check_conditions(spec);
      auto w = csv("check.csv");
      w.row("property", "value");
      w.row("has_dust", c.has_dust);
      w.row("log_condition", c.log_condition);
      w.row("log_one_minus_p_integral", c.log_one_minus_p_integral);
      w.row("inverse_p_integral", c.inverse_p_integral);
      w.row("intensity_integral", c.intensity_integral);
      w.row("intensity_finite", std::isfinite(c.intensity_integral));
      w.row("log_nonlattice", to_string(c.log_nonlattice));
      w.row("star_atom", c.star_atom);
    } else if (subcommand == "rates") {
      const auto spec = cfg.measure();
      const int b_max = cfg.get<int>("b_max", 10);
      if (b_max < 2) throw CliError(kPrecondition, "rates: need b_max >= 2");
      const RateModel model(spec, b_max);
      auto w = csv("rates.csv");
      w.row("b", "k", "j", "lambda", "rho", "rho_total", "event_rate");
      for (int b = 2; b <= b_max; ++b) {
        const auto r = model.row(b);
        for (int k = 2; k <= b; ++k) {
          const int j = b - k + 1;
          w.row(b, k, j, r.lambda(k), r.rho(j), r.rho_total(), std::exp(r.log_event_rate));
        }
      }
    } else if (subcommand == "simulate") {
      const auto spec = cfg.measure();
      const int n = cfg.get<int>("n");
      const auto reps = cfg.get<std::int64_t>("replicates", 1000);
      if (n < 2 || reps < 1) throw CliError(kPrecondition, "simulate: need n >= 2 and replicates >= 1");
      const JumpSampler sampler(spec, n);
      std::vector<PathRecord> paths(static_cast<std::size_t>(reps));
      parallel_for(paths.size(), threads, [&](std::size_t r) {
        Stream rng = Stream::substream(seed, r);
        paths[r] = simulate_path(sampler, n, rng);
      });
      auto w = csv("simulate.csv");
      w.row("replicate", "n", "seed", "L_n", "T_n", "n_jumps");
      for (std::size_t r = 0; r < paths.size(); ++r) w.row(r, n, seed, paths[r].L, paths[r].T, paths[r].jumps());
    } else if (subcommand == "last-merger") {
      const auto spec = cfg.measure();
      const int n = cfg.get<int>("n");
      const auto reps = cfg.get<std::int64_t>("replicates", 10000);
      if (n < 2 || reps < 1) throw CliError(kPrecondition, "last-merger: need n >= 2 and replicates >= 1");
      ProfileOptions popt;
      popt.override_size_guard = opts.override_size_guard;
      const auto prof = absorption_profile(spec, n, popt);
      const auto mc = last_merger_mc(spec, n, reps, seed, threads);
      auto w = csv("last_merger.csv");
      w.row("i", "exact_prob", "mc_freq", "ci_lo", "ci_hi");
      for (int i = 2; i <= n; ++i) {
        const auto idx = static_cast<std::size_t>(i - 2);
        if (prof.last_merger(i) > 0.0 || mc.counts[idx] > 0)
          w.row(i, prof.last_merger(i), mc.freq[idx], mc.ci_lo[idx], mc.ci_hi[idx]);
      }
    } else if (subcommand == "invariant") {
      const auto spec = cfg.measure();
      InvariantOptions io;
      io.tolerance = cfg.get<double>("tolerance", 1e-4);
      io.override_size_guard = opts.override_size_guard;
      io.threads = threads;
      const auto sched = detail::int_list(cfg, "n_schedule");
      const int J = cfg.get<int>("J");
      const auto est = invariant_from_profiles(spec, sched, J, io);
      auto w = csv("invariant.csv");
      w.comment(std::string("verdict: ") + to_string(est.verdict) + " sup_rel_diff=" + fmt_real(est.sup_rel_diff) +
                " tail_mass=" + fmt_real(est.tail_mass));
      w.row("i", "mu_i", "mu_i_rho_i1");
      for (int i = 2; i <= J; ++i) w.row(i, est.mu_at(i), est.profile.last_merger(i));
    } else if (subcommand == "reverse") {
      const auto spec = cfg.measure();
      InvariantOptions io;
      io.tolerance = cfg.get<double>("tolerance", 1e-4);
      io.override_size_guard = opts.override_size_guard;
      io.threads = threads;
      const auto sched = detail::int_list(cfg, "n_schedule");
      const int J = cfg.get<int>("J");
      const int n = cfg.get<int>("n", sched.back());
      const auto reps = cfg.get<std::int64_t>("replicates", 10000);
      const int r = cfg.get<int>("r", 1);
      const double horizon = cfg.get<double>("horizon", 1.0);
      const auto est = invariant_from_profiles(spec, sched, J, io);
      const auto rspec = build_reversed(spec, est);
      const auto test = empirical_reversal_test(spec, n, reps, r, seed, rspec, threads);
      // Reversed paths use substreams after the forward replicas.
      std::vector<ReversedPath> paths(static_cast<std::size_t>(reps));
      parallel_for(paths.size(), threads, [&](std::size_t i) {
        Stream rng = Stream::substream(seed, (std::uint64_t{1} << 62) | i);
        paths[i] = simulate_reversed(rspec, horizon, rng);
      });
      auto wp = csv("reverse_paths.csv");
      wp.row("replicate", "n_states", "truncated", "time", "states");
      for (std::size_t i = 0; i < paths.size(); ++i) {
        double t = 0.0;
        for (double h : paths[i].holding_times) t += h;
        std::string states;
        for (int s : paths[i].states) states += (states.empty() ? "" : ";") + std::to_string(s);
        wp.row(i, paths[i].states.size(), paths[i].truncated, t, states);
      }
      double identity = 0.0;
      for (int i = 2; i <= J / 2; ++i)
        identity = std::max(identity, std::abs(rspec.exit(i) / rspec.rho_total[static_cast<std::size_t>(i - 2)] - 1.0));
      auto ws = csv("reverse_summary.csv");
      ws.row("metric", "value");
      ws.row("verdict", to_string(est.verdict));
      ws.row("J", J);
      ws.row("initial_tail", rspec.initial_tail);
      ws.row("max_rel_exit_rate_deviation", identity);
      ws.row("n", n);
      ws.row("replicates", reps);
      ws.row("r", r);
      ws.row("short_paths", test.short_paths);
      ws.row("tuples_enumerated", test.tuples_enumerated);
      ws.row("chi_square", test.chi.statistic);
      ws.row("chi_square_df", test.chi.df);
      ws.row("chi_square_p", test.chi.p_value);
      for (std::size_t k = 0; k < test.ks.size(); ++k) {
        ws.row("ks_delta" + std::to_string(k), test.ks[k].statistic);
        ws.row("ks_delta" + std::to_string(k) + "_p", test.ks[k].p_value);
      }
      ws.row("insufficient", test.insufficient);
    } else if (subcommand == "couple") {
      const auto spec = cfg.measure();
      const auto ns = detail::n_schedule(cfg);
      const auto ks = detail::int_list(cfg, "k_schedule");
      const auto reps = cfg.get<std::int64_t>("replicates", 1000);
      const double level = cfg.get<double>("quantile", 0.9);
      const auto traces = coupling_summaries(spec, ns, ks, reps, seed, threads);
      const auto table = quantile_table(traces, level);
      auto wt = csv("couple_traces.csv");
      wt.row("n", "k", "replicate", "events", "stop", "sup_discrepancy", "sup_S_discrepancy", "max_residual");
      for (const auto& t : traces)
        wt.row(t.n, t.k, t.replicate, t.events, t.stop == CouplingStop::absorbed ? "absorbed" : "threshold",
               t.sup_discrepancy, t.sup_S_discrepancy, t.max_residual);
      auto wq = csv("couple_quantiles.csv");
      wq.comment("quantile level " + fmt_real(level) + "; nonincreasing_in_k=" +
                 (table.nonincreasing_in_k() ? "true" : "false"));
      wq.row("n", "k", "replicates", "quantile", "ci_lo", "ci_hi", "S_quantile", "S_ci_lo", "S_ci_hi",
             "max_residual");
      for (const auto& r : table.rows)
        wq.row(r.n, r.k, r.replicates, r.quantile, r.ci_lo, r.ci_hi, r.S_quantile, r.S_ci_lo, r.S_ci_hi,
               r.max_residual);
    } else if (subcommand == "reference") {
      const auto family = cfg.get<std::string>("family", std::string("beta"));
      const int J = cfg.get<int>("J", 100);
      std::vector<double> probs, mu;
      if (family == "kingman") {
        probs = kingman_limit_law(J).probs;
        mu = kingman_invariant(J);
      } else if (family == "beta") {
        const double alpha = cfg.get<double>("alpha");
        probs = beta_limit_law(alpha, J).probs;
        mu = beta_mu_from_limit(alpha, J);
      } else {
        throw CliError(kConfig, "config: 'family' must be kingman or beta");
      }
      auto w = csv("reference.csv");
      w.row("i", "prob", "mu");
      for (int i = 2; i <= J; ++i) w.row(i, probs[static_cast<std::size_t>(i - 2)], mu[static_cast<std::size_t>(i - 2)]);
    } else if (subcommand == "lattice-scan") {
      const auto spec = cfg.measure();
      const auto grid = cfg.get<std::vector<double>>("lambda_grid", std::vector<double>{0.0, 0.25, 0.5, 0.75});
      const int m_min = cfg.get<int>("m_min", 3);
      const int m_max = cfg.get<int>("m_max", 9);
      const auto rep = lattice_scan(spec, grid, m_min, m_max, threads, opts.override_size_guard);
      auto w = csv("lattice_scan.csv");
      w.row("lambda", "m", "n", "p_last_merger_2");
      for (const auto& r : rep.rows) w.row(r.lambda, r.m, r.n, r.p_last2);
      auto ws = csv("lattice_spread.csv");
      ws.row("m", "min", "max", "spread", "drift");
      for (const auto& s : rep.spread) ws.row(s.m, s.min, s.max, s.spread, s.drift);
    }

    for (const auto& key : cfg.unused_keys()) log << "warning: config key '" << key << "' is unused by " << subcommand << "\n";
    return kOk;
  } catch (const CliError& e) {
    log << "error: " << e.what() << "\n";
    return e.code();
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::domain_error& e) {
    log << "error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const nlohmann::json::exception& e) {
    log << "error: config: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kFailure;
  }
}

/// Reads the config file and runs `subcommand`.
inline int run(const std::string& subcommand, const std::string& config_path, const RunOptions& opts,
               std::ostream& log) {
  std::ifstream in(config_path);
  if (!in) {
    log << "error: cannot read config " << config_path << "\n";
    return kConfig;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    log << "error: malformed config " << config_path << ": " << e.what() << "\n";
    return kConfig;
  }
  return run_config(subcommand, std::move(j), opts, log);
}

}  // namespace lcoal::cli
