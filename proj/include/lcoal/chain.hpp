#pragma once

// The block-counting chain N_n: path simulation, the exact hitting DP, and the
// law of the last merger size L_n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
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

/// Largest n the O(n^2) DP accepts without an explicit override.
inline constexpr int kDefaultSizeGuard = 20000;

struct PathRecord {
  int initial_n = 0;
  std::vector<int> states;            // n = s_0 > s_1 > ... > s_m = 1
  std::vector<double> holding_times;  // one per state before absorption
  double T = 0.0;                     // absorption time
  int L = 0;                          // last state before 1

  int jumps() const { return static_cast<int>(states.size()) - 1; }
};

/// Embedded-chain sampler: next state by inverse CDF over j = 1, 2, ... and
/// exponential holding times with rate rho_b.
///
/// Rows for b <= cache_limit are tabulated once at construction; larger rows
/// are recomputed on every call.
class JumpSampler {
 public:
  JumpSampler(const LambdaSpec& spec, int n, int cache_limit = 4096)
      : model_(spec, std::max(n, 2)), n_(n), cached_(std::min(n, cache_limit)) {
    if (n < 2) throw std::invalid_argument("JumpSampler: need n >= 2");
    offsets_.assign(static_cast<std::size_t>(cached_) + 2, 0);
    for (int b = 2; b <= cached_; ++b)
      offsets_[static_cast<std::size_t>(b + 1)] = offsets_[static_cast<std::size_t>(b)] + static_cast<std::size_t>(b - 1);
    cdf_.resize(offsets_.back());
    rho_.assign(static_cast<std::size_t>(cached_) + 1, 0.0);
    std::vector<double> scratch(static_cast<std::size_t>(n_));
    for (int b = 2; b <= cached_; ++b) {
      auto row = std::span(cdf_).subspan(offsets_[static_cast<std::size_t>(b)], static_cast<std::size_t>(b - 1));
      rho_[static_cast<std::size_t>(b)] = fill_cdf(b, row, scratch);
    }
  }

  int n() const { return n_; }
  const RateModel& model() const { return model_; }

  double rho_total(int b) const {
    if (b <= cached_) return rho_[static_cast<std::size_t>(b)];
    std::vector<double> scratch(static_cast<std::size_t>(b));
    return std::exp(model_.log_rho_row(b, scratch));
  }

  /// Next state from b given u in [0, 1).
  int next_state(int b, double u) const {
    if (b <= cached_) {
      const auto row = std::span(cdf_).subspan(offsets_[static_cast<std::size_t>(b)], static_cast<std::size_t>(b - 1));
      return pick(row, u);
    }
    std::vector<double> cdf(static_cast<std::size_t>(b - 1));
    std::vector<double> scratch(static_cast<std::size_t>(b));
    fill_cdf(b, cdf, scratch);
    return pick(cdf, u);
  }

 private:
  // Writes the normalized CDF over j = 1..b-1; returns rho_b.
  double fill_cdf(int b, std::span<double> cdf, std::vector<double>& scratch) const {
    const double total = model_.log_rho_row(b, scratch);
    if (total == kNegInf) throw std::domain_error("JumpSampler: state " + std::to_string(b) + " is absorbing");
    double acc = 0.0;
    int last_positive = 0;
    for (int j = 1; j < b; ++j) {
      const double p = std::exp(scratch[static_cast<std::size_t>(j - 1)] - total);
      acc += p;
      cdf[static_cast<std::size_t>(j - 1)] = acc;
      if (p > 0.0) last_positive = j;
    }
    for (int j = 1; j < b; ++j) cdf[static_cast<std::size_t>(j - 1)] /= acc;
    for (int j = last_positive; j < b; ++j) cdf[static_cast<std::size_t>(j - 1)] = 1.0;
    return std::exp(total);
  }

  static int pick(std::span<const double> cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(it - cdf.begin()) + 1;
  }

  RateModel model_;
  int n_;
  int cached_;
  std::vector<std::size_t> offsets_;
  std::vector<double> cdf_;
  std::vector<double> rho_;
};

inline PathRecord simulate_path(const JumpSampler& sampler, int n, Stream& rng) {
  if (n < 2 || n > sampler.n()) throw std::invalid_argument("simulate_path: n outside sampler range");
  PathRecord path;
  path.initial_n = n;
  path.states.push_back(n);
  int b = n;
  while (b > 1) {
    const double hold = rng.exponential() / sampler.rho_total(b);
    const int next = sampler.next_state(b, rng.uniform());
    path.holding_times.push_back(hold);
    path.T += hold;
    if (next == 1) path.L = b;
    path.states.push_back(next);
    b = next;
  }
  return path;
}

inline PathRecord simulate_path(const LambdaSpec& spec, int n, Stream& rng) {
  return simulate_path(JumpSampler(spec, n), n, rng);
}

enum class RowSource { closed_form, recursion };

struct ProfileOptions {
  bool override_size_guard = false;
  RowSource rows = RowSource::closed_form;
};

/// Exact hitting data of the chain started at n. Vectors are indexed by i-2.
struct AbsorptionProfile {
  int n = 0;
  std::vector<double> hit_prob;         // h(i) = P(chain visits i)
  std::vector<double> last_merger_law;  // P(L_n = i) = h(i) P_{i,1}
  std::vector<double> mu_profile;       // h(i) / rho_i
  std::vector<double> rho_total;        // rho_i
  std::vector<double> rho_to_one;       // rho_{i,1} = lambda_{i,i}

  double h(int i) const { return hit_prob[static_cast<std::size_t>(i - 2)]; }
  double last_merger(int i) const { return last_merger_law[static_cast<std::size_t>(i - 2)]; }
  double mu(int i) const { return mu_profile[static_cast<std::size_t>(i - 2)]; }
};

inline void check_size_guard(int n, bool override_guard, const char* what) {
  if (n > kDefaultSizeGuard && !override_guard)
    throw std::invalid_argument(std::string(what) + ": n=" + std::to_string(n) + " exceeds the size guard " +
                                std::to_string(kDefaultSizeGuard) + "; pass the override flag to proceed");
}

/// Backward DP over states n, n-1, ..., 2 distributing h(j) P_{j,i} onto i < j.
inline AbsorptionProfile absorption_profile(const LambdaSpec& spec, int n, const ProfileOptions& options = {}) {
  if (n < 2) throw std::invalid_argument("absorption_profile: need n >= 2");
  check_size_guard(n, options.override_size_guard, "absorption_profile");
  const RateModel model(spec, n);
  const auto& lf = model.log_factorial();
  AbsorptionProfile prof;
  prof.n = n;
  const auto size = static_cast<std::size_t>(n - 1);
  prof.hit_prob.assign(size, 0.0);
  prof.last_merger_law.assign(size, 0.0);
  prof.mu_profile.assign(size, 0.0);
  prof.rho_total.assign(size, 0.0);
  prof.rho_to_one.assign(size, 0.0);
  // h indexed directly by state.
  std::vector<double> h(static_cast<std::size_t>(n) + 1, 0.0);
  h[static_cast<std::size_t>(n)] = 1.0;
  std::vector<double> log_rho(static_cast<std::size_t>(n));
  std::vector<double> prob(static_cast<std::size_t>(n));
  std::optional<DescendingRows> rows;
  if (options.rows == RowSource::recursion) rows.emplace(DescendingRows::from_model(model, n));

  for (int j = n; j >= 2; --j) {
    double total;
    if (rows) {
      const auto& lam = rows->log_lambda();  // lambda_{j,k}, k = 2..j
      for (int i = 1; i < j; ++i) {
        const double l = lam[static_cast<std::size_t>(j - i - 1)];
        log_rho[static_cast<std::size_t>(i - 1)] = l == kNegInf ? kNegInf : lf.log_binomial(j, j - i + 1) + l;
      }
      total = log_sum_exp(std::span<const double>(log_rho).first(static_cast<std::size_t>(j - 1)));
      rows->step();
    } else {
      total = model.log_rho_row(j, log_rho);
    }
    const auto idx = static_cast<std::size_t>(j - 2);
    prof.rho_total[idx] = std::exp(total);
    prof.rho_to_one[idx] = std::exp(log_rho[0]);
    const double hj = h[static_cast<std::size_t>(j)];
    prof.hit_prob[idx] = hj;
    if (total == kNegInf) continue;  // absorbing: unreachable for a nonzero measure
    prof.mu_profile[idx] = hj / prof.rho_total[idx];
    if (hj == 0.0) continue;
    // Normalize the row in linear space so rounding cannot leak mass.
    double sum = 0.0;
    for (int i = 1; i < j; ++i) {
      const double p = std::exp(log_rho[static_cast<std::size_t>(i - 1)] - total);
      prob[static_cast<std::size_t>(i - 1)] = p;
      sum += p;
    }
    const double scale = hj / sum;
    prof.last_merger_law[idx] = prob[0] * scale;
    for (int i = 2; i < j; ++i) h[static_cast<std::size_t>(i)] += prob[static_cast<std::size_t>(i - 1)] * scale;
  }
  return prof;
}

struct LastMergerEstimate {
  int n = 0;
  std::int64_t replicates = 0;
  double confidence = 0.99;
  std::vector<std::int64_t> counts;  // index i-2
  std::vector<double> freq;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
};

/// Monte Carlo law of L_n from `replicates` independent paths; replica r uses
/// Stream::substream(seed, r).
inline LastMergerEstimate last_merger_mc(const JumpSampler& sampler, int n, std::int64_t replicates,
                                         std::uint64_t seed, int threads = 1, double confidence = 0.99) {
  if (replicates < 1) throw std::invalid_argument("last_merger_mc: need replicates >= 1");
  std::vector<int> last(static_cast<std::size_t>(replicates));
  parallel_for(last.size(), threads, [&](std::size_t r) {
    Stream rng = Stream::substream(seed, r);
    last[r] = simulate_path(sampler, n, rng).L;
  });
  LastMergerEstimate est;
  est.n = n;
  est.replicates = replicates;
  est.confidence = confidence;
  est.counts.assign(static_cast<std::size_t>(n - 1), 0);
  for (int l : last) ++est.counts[static_cast<std::size_t>(l - 2)];
  for (auto c : est.counts) {
    est.freq.push_back(static_cast<double>(c) / static_cast<double>(replicates));
    const auto ci = wilson_interval(c, replicates, confidence);
    est.ci_lo.push_back(ci.lo);
    est.ci_hi.push_back(ci.hi);
  }
  return est;
}

inline LastMergerEstimate last_merger_mc(const LambdaSpec& spec, int n, std::int64_t replicates,
                                         std::uint64_t seed, int threads = 1, double confidence = 0.99) {
  if (n < 2) throw std::invalid_argument("last_merger_mc: need n >= 2");
  return last_merger_mc(JumpSampler(spec, n), n, replicates, seed, threads, confidence);
}

struct FirstPassage {
  double time;
  int state;
};

/// tau_{k,n} = inf{t : N_n(t) < k} and N_n(tau_{k,n}) read off a path.
inline FirstPassage first_passage_stats(const PathRecord& path, int k) {
  if (k < 2 || k > path.initial_n) throw std::invalid_argument("first_passage_stats: need 2 <= k <= n");
  double t = 0.0;
  for (std::size_t m = 1; m < path.states.size(); ++m) {
    t += path.holding_times[m - 1];
    if (path.states[m] < k) return {t, path.states[m]};
  }
  throw std::logic_error("first_passage_stats: path never absorbed");
}

}  // namespace lcoal
