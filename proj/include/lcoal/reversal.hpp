#pragma once

// The reversed block-counting chain started from the last-merger law.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcoal/chain.hpp"
#include "lcoal/invariant.hpp"
#include "lcoal/parallel.hpp"
#include "lcoal/random.hpp"
#include "lcoal/rates.hpp"
#include "lcoal/stats.hpp"

namespace lcoal {

struct ReversedChainSpec {
  int J = 0;
  // rho_hat[i-2][j-i-1] = mu_j rho_{ji} / mu_i for i < j <= J
  std::vector<std::vector<double>> rho_hat;
  std::vector<double> escape_rate;  // sum_{j>J} rho_hat_{ij}
  std::vector<double> exit_rate;    // rho_hat_i including the escape part
  std::vector<double> rho_total;    // forward rho_i, for comparison
  std::vector<double> initial_law;  // mu_i rho_{i1}, i = 2..J
  double initial_tail = 0.0;

  double rate(int i, int j) const {
    if (j <= i || j > J) return 0.0;
    return rho_hat[static_cast<std::size_t>(i - 2)][static_cast<std::size_t>(j - i - 1)];
  }
  double exit(int i) const { return exit_rate[static_cast<std::size_t>(i - 2)]; }
  double escape(int i) const { return escape_rate[static_cast<std::size_t>(i - 2)]; }
  double initial(int i) const { return initial_law[static_cast<std::size_t>(i - 2)]; }
};

/// Rates of the reversal built from the profile behind `inv`; the escape
/// part sums over all states of that profile above J.
inline ReversedChainSpec build_reversed(const LambdaSpec& spec, const InvariantEstimate& inv) {
  if (inv.verdict != Verdict::converged)
    throw std::invalid_argument(std::string("build_reversed: invariant estimate is ") + to_string(inv.verdict) +
                                ", need converged");
  const auto& prof = inv.profile;
  const int J = inv.J;
  const int n = prof.n;
  const RateModel model(spec, n);
  const auto& lf = model.log_factorial();
  ReversedChainSpec r;
  r.J = J;
  r.rho_hat.resize(static_cast<std::size_t>(J - 1));
  r.escape_rate.assign(static_cast<std::size_t>(J - 1), 0.0);
  r.exit_rate.assign(static_cast<std::size_t>(J - 1), 0.0);
  r.rho_total.assign(static_cast<std::size_t>(J - 1), 0.0);
  r.initial_law.assign(static_cast<std::size_t>(J - 1), 0.0);
  for (int i = 2; i <= J; ++i) {
    const auto idx = static_cast<std::size_t>(i - 2);
    const double mi = prof.mu(i);
    if (!(mi > 0.0)) throw std::domain_error("build_reversed: mu_" + std::to_string(i) + " is not positive");
    auto& row = r.rho_hat[idx];
    row.assign(static_cast<std::size_t>(J - i), 0.0);
    for (int j = i + 1; j <= n; ++j) {
      const double lam = model.log_lambda(j, j - i + 1);
      if (lam == kNegInf) continue;
      const double v = prof.mu(j) * std::exp(lf.log_binomial(j, j - i + 1) + lam) / mi;
      if (j <= J) {
        row[static_cast<std::size_t>(j - i - 1)] = v;
      } else {
        r.escape_rate[idx] += v;
      }
    }
    double s = r.escape_rate[idx];
    for (double v : row) s += v;
    r.exit_rate[idx] = s;
    r.rho_total[idx] = prof.rho_total[idx];
    r.initial_law[idx] = prof.last_merger(i);
  }
  double mass = 0.0;
  for (double p : r.initial_law) mass += p;
  r.initial_tail = std::max(0.0, 1.0 - mass);
  return r;
}

struct ReversedPath {
  std::vector<int> states;            // upward
  std::vector<double> holding_times;  // completed holds only
  bool truncated = false;             // a jump left 2..J (or the start did)
};

/// Upward path on [0, horizon]. A start or jump outside 2..J sets `truncated`
/// and ends the path without recording the unknown state.
inline ReversedPath simulate_reversed(const ReversedChainSpec& rspec, double horizon, Stream& rng) {
  ReversedPath path;
  double u = rng.uniform();
  int state = 0;
  for (int i = 2; i <= rspec.J; ++i) {
    u -= rspec.initial(i);
    if (u < 0.0) {
      state = i;
      break;
    }
  }
  if (state == 0) {
    path.truncated = true;
    return path;
  }
  path.states.push_back(state);
  double t = 0.0;
  while (true) {
    const double rate = rspec.exit(state);
    if (!(rate > 0.0)) break;
    const double hold = rng.exponential() / rate;
    if (t + hold > horizon) break;
    t += hold;
    path.holding_times.push_back(hold);
    double v = rng.uniform() * rate;
    int next = 0;
    for (int j = state + 1; j <= rspec.J; ++j) {
      v -= rspec.rate(state, j);
      if (v < 0.0) {
        next = j;
        break;
      }
    }
    if (next == 0) {
      path.truncated = true;
      break;
    }
    path.states.push_back(next);
    state = next;
  }
  return path;
}

struct ReversalTestResult {
  int r = 0;
  std::int64_t replicates = 0;
  std::int64_t short_paths = 0;  // fewer than r+1 states before absorption
  ChiSquareResult chi;
  std::vector<KsResult> ks;  // one per Delta_k, k = 0..r
  std::size_t tuples_enumerated = 0;
  bool insufficient = false;  // fewer than 5 expected counts in every category

  double min_p() const {
    double p = chi.p_value;
    for (const auto& k : ks) p = std::min(p, k.p_value);
    return p;
  }
  bool passes(double level) const { return !insufficient && min_p() >= level; }
};

namespace detail {

inline void enumerate_tuples(const ReversedChainSpec& rspec, int r, double prob_floor, std::vector<int>& prefix,
                             double prob, std::map<std::vector<int>, double>& out) {
  if (static_cast<int>(prefix.size()) == r + 1) {
    out[prefix] = prob;
    return;
  }
  const int i = prefix.back();
  const double exit = rspec.exit(i);
  for (int j = i + 1; j <= rspec.J; ++j) {
    const double p = prob * rspec.rate(i, j) / exit;
    if (p < prob_floor) continue;
    prefix.push_back(j);
    enumerate_tuples(rspec, r, prob_floor, prefix, p, out);
    prefix.pop_back();
  }
}

}  // namespace detail

/// Forward paths from n, read backward from absorption: compares the law of
/// (L_n, next r states upward) with the reversed chain by chi-square, and each
/// reversed holding time with Exp(rho_state) by Kolmogorov-Smirnov.
inline ReversalTestResult empirical_reversal_test(const LambdaSpec& spec, int n, std::int64_t replicates, int r,
                                                  std::uint64_t seed, const ReversedChainSpec& rspec,
                                                  int threads = 1) {
  if (r < 0 || r > 5) throw std::invalid_argument("empirical_reversal_test: need 0 <= r <= 5");
  if (replicates < 1) throw std::invalid_argument("empirical_reversal_test: need replicates >= 1");
  const JumpSampler sampler(spec, n);
  const auto count = static_cast<std::size_t>(replicates);
  const auto width = static_cast<std::size_t>(r) + 1;
  std::vector<int> tuples(count * width, 0);
  std::vector<double> holds(count * width, 0.0);
  std::vector<char> complete(count, 0);
  parallel_for(count, threads, [&](std::size_t rep) {
    Stream rng = Stream::substream(seed, rep);
    const auto path = simulate_path(sampler, n, rng);
    const int m = path.jumps();  // states[m] == 1
    if (m - 1 - r < 0) return;
    for (std::size_t k = 0; k < width; ++k) {
      const auto pos = static_cast<std::size_t>(m - 1) - k;
      tuples[rep * width + k] = path.states[pos];
      holds[rep * width + k] = path.holding_times[pos];
    }
    complete[rep] = 1;
  });

  ReversalTestResult res;
  res.r = r;
  res.replicates = replicates;
  std::map<std::vector<int>, double> expected;
  std::vector<int> prefix;
  const double floor = 1e-3 / static_cast<double>(replicates);
  for (int i = 2; i <= rspec.J; ++i) {
    if (rspec.initial(i) < floor) continue;
    prefix.assign(1, i);
    detail::enumerate_tuples(rspec, r, floor, prefix, rspec.initial(i), expected);
  }
  res.tuples_enumerated = expected.size();

  std::map<std::vector<int>, std::size_t> slot;
  std::vector<double> probs;
  for (const auto& [key, p] : expected) {
    slot.emplace(key, probs.size());
    probs.push_back(p);
  }
  std::vector<std::int64_t> observed(probs.size(), 0);
  std::int64_t other = 0;
  std::vector<std::vector<double>> transformed(width);
  std::vector<int> key(width);
  for (std::size_t rep = 0; rep < count; ++rep) {
    if (!complete[rep]) {
      ++res.short_paths;
      ++other;
      continue;
    }
    for (std::size_t k = 0; k < width; ++k) {
      key[k] = tuples[rep * width + k];
      const int b = key[k];
      transformed[k].push_back(-std::expm1(-sampler.rho_total(b) * holds[rep * width + k]));
    }
    const auto it = slot.find(key);
    if (it == slot.end()) {
      ++other;
    } else {
      ++observed[it->second];
    }
  }
  res.chi = chi_square_gof(observed, probs, other);
  for (auto& values : transformed) res.ks.push_back(ks_uniform(std::move(values)));
  const double n_rep = static_cast<double>(replicates);
  res.insufficient = std::none_of(probs.begin(), probs.end(), [&](double p) { return p * n_rep >= 5.0; });
  return res;
}

}  // namespace lcoal
