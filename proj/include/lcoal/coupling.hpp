#pragma once

// Event-driven simulation of N_n together with the subordinator S and the
// deterministic-flow approximation Y_n of log N_n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcoal/lambda_measure.hpp"
#include "lcoal/numeric.hpp"
#include "lcoal/parallel.hpp"
#include "lcoal/random.hpp"
#include "lcoal/rates.hpp"
#include "lcoal/stats.hpp"

namespace lcoal {

enum class CouplingStop { threshold, absorbed };

struct CouplingTrace {
  int n = 0;
  int k_threshold = 0;
  std::vector<double> event_times;
  std::vector<double> jump_sizes;  // -log(1 - p_m)
  std::vector<double> S;           // S(t_m) after the event
  std::vector<int> N;              // N_n(t_m) after the event
  std::vector<double> Y_left;      // Y_n(t_m-)
  std::vector<double> Y_right;     // Y_n(t_m)
  double sup_discrepancy = 0.0;    // sup |log N_n - Y_n|
  double sup_S_discrepancy = 0.0;  // sup |log N_n - log n + S|
  double initial_discrepancy = 0.0;
  double max_residual = 0.0;  // |log n - S - Y + int f(Y)| over sample points
  bool y_monotone = true;     // Y nondecreasing between events
  CouplingStop stop = CouplingStop::threshold;
};

/// Intensity integral, mark sampler, and drift for a finite-intensity dust measure.
class CouplingModel {
 public:
  explicit CouplingModel(const LambdaSpec& spec) : spec_(spec), cond_(check_conditions(spec)) {
    if (!cond_.has_dust) throw std::domain_error("coupling: measure has no dust component");
    if (!std::isfinite(cond_.intensity_integral) || !(cond_.intensity_integral > 0.0))
      throw std::domain_error("coupling: intensity int p^-2 Lambda(dp) is infinite");
    intensity_ = cond_.intensity_integral;
    for (const auto& atom : spec_.atom_list()) {
      weights_.push_back(atom.mass / (atom.position * atom.position));
      positions_.push_back(atom.position);
    }
    if (const auto& beta = spec_.beta_component()) {
      const double a = beta->a;
      const double b = beta->b;
      // p^-2 Beta(a,b) = B(a-2,b)/B(a,b) Beta(a-2,b)
      weights_.push_back(beta->scale * std::exp(log_beta(a - 2.0, b) - log_beta(a, b)));
      positions_.push_back(-1.0);
      beta_a_ = a - 2.0;
      beta_b_ = b;
    }
  }

  const LambdaSpec& spec() const { return spec_; }
  double intensity() const { return intensity_; }

  double f(double y) const { return drift_f(spec_, cond_, y); }

  /// Draws p from p^-2 Lambda(dp) / intensity.
  double sample_mark(Stream& rng) const {
    double u = rng.uniform() * intensity_;
    std::size_t pick = weights_.size() - 1;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      u -= weights_[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    if (positions_[pick] > 0.0) return positions_[pick];
    std::gamma_distribution<double> ga(beta_a_, 1.0);
    std::gamma_distribution<double> gb(beta_b_, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
  }

 private:
  LambdaSpec spec_;
  ConditionReport cond_;
  double intensity_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> positions_;  // -1 marks the Beta component
  double beta_a_ = 0.0;
  double beta_b_ = 0.0;
};

namespace detail {

// Integral of f(Y(s)) over one step, using the cubic Hermite interpolant of Y
// through (y0, f0) and (y1, f1) and 3-point Gauss-Legendre.
template <class F>
double hermite_flow_integral(const F& f, double y0, double y1, double f0, double f1, double h) {
  static const double nodes[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  static const double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  double s = 0.0;
  for (int q = 0; q < 3; ++q) {
    const double t = nodes[q];
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double y = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * f0 + (-2 * t3 + 3 * t2) * y1 +
                     (t3 - t2) * h * f1;
    s += weights[q] * f(y);
  }
  return s * h;
}

}  // namespace detail

/// Simulates until tau_{k,n} (first time N < k) or absorption.
inline CouplingTrace simulate_coupled(const CouplingModel& model, int n, int k_threshold, Stream& rng) {
  if (n < 2) throw std::invalid_argument("simulate_coupled: need n >= 2");
  if (k_threshold < 2 || k_threshold > n) throw std::invalid_argument("simulate_coupled: need 2 <= k <= n");
  CouplingTrace tr;
  tr.n = n;
  tr.k_threshold = k_threshold;
  const double log_n = std::log(static_cast<double>(n));
  const auto f = [&](double y) { return model.f(y); };
  int N = n;
  double Y = log_n;
  double S = 0.0;
  double flow = 0.0;  // int_0^t f(Y(s)) ds
  double t = 0.0;
  tr.initial_discrepancy = std::abs(std::log(static_cast<double>(N)) - Y);
  const auto observe = [&](double y, double s, double integral) {
    const double log_N = std::log(static_cast<double>(N));
    tr.sup_discrepancy = std::max(tr.sup_discrepancy, std::abs(log_N - y));
    tr.sup_S_discrepancy = std::max(tr.sup_S_discrepancy, std::abs(log_N - log_n + s));
    if (std::isfinite(y) && std::isfinite(s))
      tr.max_residual = std::max(tr.max_residual, std::abs(log_n - s - y + integral));
  };
  observe(Y, S, flow);

  while (true) {
    const double gap = rng.exponential() / model.intensity();
    const int steps = std::max(8, static_cast<int>(std::ceil(gap / 0.05)));
    const double h = gap / steps;
    double fy = f(Y);
    for (int s = 0; s < steps; ++s) {
      const double k1 = fy;
      const double k2 = f(Y + 0.5 * h * k1);
      const double k3 = f(Y + 0.5 * h * k2);
      const double k4 = f(Y + h * k3);
      const double y1 = Y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
      const double f1 = f(y1);
      flow += detail::hermite_flow_integral(f, Y, y1, fy, f1, h);
      if (y1 < Y) tr.y_monotone = false;
      Y = y1;
      fy = f1;
      observe(Y, S, flow);
    }
    t += gap;

    const double p = model.sample_mark(rng);
    std::binomial_distribution<int> stay(N, 1.0 - p);
    const int X = p >= 1.0 ? 0 : stay(rng);
    const double jump = p >= 1.0 ? kPosInf : -std::log1p(-p);
    N = X + (X < N ? 1 : 0);
    S += jump;
    tr.event_times.push_back(t);
    tr.jump_sizes.push_back(jump);
    tr.S.push_back(S);
    tr.N.push_back(N);
    tr.Y_left.push_back(Y);
    Y -= jump;
    tr.Y_right.push_back(Y);
    if (N == 1) {
      tr.stop = CouplingStop::absorbed;
      break;  // T_n is excluded from the sup
    }
    observe(Y, S, flow);
    if (N < k_threshold) {
      tr.stop = CouplingStop::threshold;
      break;
    }
  }
  return tr;
}

inline CouplingTrace simulate_coupled(const LambdaSpec& spec, int n, int k_threshold, Stream& rng) {
  return simulate_coupled(CouplingModel(spec), n, k_threshold, rng);
}

struct QuantileRow {
  int n = 0;
  int k = 0;
  std::int64_t replicates = 0;
  double quantile = 0.0;  // of sup_discrepancy
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double S_quantile = 0.0;  // of sup_S_discrepancy
  double S_ci_lo = 0.0;
  double S_ci_hi = 0.0;
  double max_residual = 0.0;
  bool all_monotone = true;
};

struct QuantileTable {
  double level = 0.9;
  double confidence = 0.99;
  std::vector<QuantileRow> rows;  // n-major, k-minor in schedule order

  /// Point estimates non-increasing in k for every n (`use_S` selects the
  /// subordinator statistic). With `within_ci`, a step up is tolerated when it
  /// stays inside the previous row's interval.
  bool nonincreasing_in_k(bool use_S = false, bool within_ci = false) const {
    for (std::size_t m = 1; m < rows.size(); ++m) {
      const auto& a = rows[m - 1];
      const auto& b = rows[m];
      if (a.n != b.n) continue;
      const double qa = use_S ? a.S_quantile : a.quantile;
      const double qb = use_S ? b.S_quantile : b.quantile;
      const double hi = use_S ? a.S_ci_hi : a.ci_hi;
      if (qb > qa && !(within_ci && qb <= hi)) return false;
    }
    return true;
  }
};

struct TraceSummary {
  int n = 0;
  int k = 0;
  std::uint64_t replicate = 0;
  std::size_t events = 0;
  CouplingStop stop = CouplingStop::threshold;
  double sup_discrepancy = 0.0;
  double sup_S_discrepancy = 0.0;
  double initial_discrepancy = 0.0;
  double max_residual = 0.0;
  bool y_monotone = true;
};

/// Independent traces for every (n, k) cell, n-major. Replica `rep` of cell
/// (n_idx, k_idx) uses substream ((n_idx*K + k_idx) << 32) | rep.
inline std::vector<TraceSummary> coupling_summaries(const LambdaSpec& spec, const std::vector<int>& n_schedule,
                                                    const std::vector<int>& k_schedule, std::int64_t replicates,
                                                    std::uint64_t seed, int threads = 1) {
  if (replicates < 1) throw std::invalid_argument("coupling: need replicates >= 1");
  for (int n : n_schedule)
    for (int k : k_schedule)
      if (k < 2 || k > n)
        throw std::invalid_argument("coupling: invalid (n, k) = (" + std::to_string(n) + ", " + std::to_string(k) +
                                    ")");
  const CouplingModel model(spec);
  const auto K = static_cast<std::uint64_t>(k_schedule.size());
  const auto reps = static_cast<std::size_t>(replicates);
  const std::size_t cells = n_schedule.size() * k_schedule.size();
  std::vector<TraceSummary> out(cells * reps);
  parallel_for(out.size(), threads, [&](std::size_t idx) {
    const std::size_t cell = idx / reps;
    const std::uint64_t rep = idx % reps;
    const std::size_t ni = cell / k_schedule.size();
    const std::size_t ki = cell % k_schedule.size();
    Stream rng = Stream::substream(seed, ((static_cast<std::uint64_t>(ni) * K + ki) << 32) | rep);
    const auto tr = simulate_coupled(model, n_schedule[ni], k_schedule[ki], rng);
    auto& s = out[idx];
    s.n = n_schedule[ni];
    s.k = k_schedule[ki];
    s.replicate = rep;
    s.events = tr.event_times.size();
    s.stop = tr.stop;
    s.sup_discrepancy = tr.sup_discrepancy;
    s.sup_S_discrepancy = tr.sup_S_discrepancy;
    s.initial_discrepancy = tr.initial_discrepancy;
    s.max_residual = tr.max_residual;
    s.y_monotone = tr.y_monotone;
  });
  return out;
}

/// Empirical `level`-quantiles per (n, k) cell with order-statistic intervals.
inline QuantileTable quantile_table(const std::vector<TraceSummary>& traces, double level = 0.9,
                                    double confidence = 0.99) {
  QuantileTable table;
  table.level = level;
  table.confidence = confidence;
  std::size_t begin = 0;
  while (begin < traces.size()) {
    std::size_t end = begin;
    while (end < traces.size() && traces[end].n == traces[begin].n && traces[end].k == traces[begin].k) ++end;
    std::vector<double> sup, sup_S;
    QuantileRow row;
    row.n = traces[begin].n;
    row.k = traces[begin].k;
    row.replicates = static_cast<std::int64_t>(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      sup.push_back(traces[i].sup_discrepancy);
      sup_S.push_back(traces[i].sup_S_discrepancy);
      row.max_residual = std::max(row.max_residual, traces[i].max_residual);
      row.all_monotone = row.all_monotone && traces[i].y_monotone;
    }
    std::sort(sup.begin(), sup.end());
    std::sort(sup_S.begin(), sup_S.end());
    row.quantile = empirical_quantile_sorted(sup, level);
    const auto ci = quantile_interval_sorted(sup, level, confidence);
    row.ci_lo = ci.lo;
    row.ci_hi = ci.hi;
    row.S_quantile = empirical_quantile_sorted(sup_S, level);
    const auto ci_S = quantile_interval_sorted(sup_S, level, confidence);
    row.S_ci_lo = ci_S.lo;
    row.S_ci_hi = ci_S.hi;
    table.rows.push_back(row);
    begin = end;
  }
  return table;
}

inline QuantileTable discrepancy_quantiles(const LambdaSpec& spec, const std::vector<int>& n_schedule,
                                           const std::vector<int>& k_schedule, std::int64_t replicates,
                                           std::uint64_t seed, int threads = 1, double level = 0.9,
                                           double confidence = 0.99) {
  return quantile_table(coupling_summaries(spec, n_schedule, k_schedule, replicates, seed, threads), level,
                        confidence);
}

}  // namespace lcoal
