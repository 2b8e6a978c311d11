#pragma once

// rho-invariant measures as limits of the pre-limit profiles mu^(n).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcoal/chain.hpp"
#include "lcoal/lambda_measure.hpp"
#include "lcoal/parallel.hpp"
#include "lcoal/rates.hpp"

namespace lcoal {

enum class Verdict { converged, non_convergent, diverging_to_infinity };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::converged: return "converged";
    case Verdict::non_convergent: return "non_convergent";
    case Verdict::diverging_to_infinity: return "diverging_to_infinity";
  }
  return "non_convergent";
}

struct InvariantOptions {
  double tolerance = 1e-4;
  double divergence_level = 1e-3;  // max_{i<=J} P(L_n = i) below this at the largest n
  bool override_size_guard = false;
  int threads = 1;
};

struct InvariantEstimate {
  int J = 0;
  std::vector<double> mu;         // mu_i, i = 2..J (index i-2), from the largest n
  double normalization = 0.0;     // sum_{i<=n} mu_i rho_{i1} at the largest n
  double tail_mass = 0.0;         // sum_{i>J} mu_i rho_{i1}
  std::vector<int> source_n_values;
  double sup_rel_diff = 0.0;
  Verdict verdict = Verdict::non_convergent;
  std::vector<double> peak_limit_prob;  // max_{i<=J} P(L_n = i), one per n
  AbsorptionProfile profile;            // full profile at the largest n

  double mu_at(int i) const { return mu[static_cast<std::size_t>(i - 2)]; }
};

/// Runs the exact DP for every n in the schedule and compares the profiles at
/// the two largest n on 2..J.
inline InvariantEstimate invariant_from_profiles(const LambdaSpec& spec, std::vector<int> n_schedule, int J,
                                                 const InvariantOptions& options = {}) {
  if (J < 2) throw std::invalid_argument("invariant_from_profiles: need J >= 2");
  if (n_schedule.size() < 2) throw std::invalid_argument("invariant_from_profiles: need at least two n values");
  if (!std::is_sorted(n_schedule.begin(), n_schedule.end()) ||
      std::adjacent_find(n_schedule.begin(), n_schedule.end()) != n_schedule.end())
    throw std::invalid_argument("invariant_from_profiles: n schedule must be strictly increasing");
  if (n_schedule.back() < 4 * J)
    throw std::invalid_argument("invariant_from_profiles: largest n=" + std::to_string(n_schedule.back()) +
                                " is below 4*J=" + std::to_string(4 * J));
  if (n_schedule.front() <= J)
    throw std::invalid_argument("invariant_from_profiles: every n must exceed J");

  std::vector<AbsorptionProfile> profiles(n_schedule.size());
  ProfileOptions popt;
  popt.override_size_guard = options.override_size_guard;
  parallel_for(profiles.size(), options.threads,
               [&](std::size_t m) { profiles[m] = absorption_profile(spec, n_schedule[m], popt); });

  InvariantEstimate est;
  est.J = J;
  est.source_n_values = n_schedule;
  for (const auto& p : profiles) {
    double peak = 0.0;
    for (int i = 2; i <= J; ++i) peak = std::max(peak, p.last_merger(i));
    est.peak_limit_prob.push_back(peak);
  }

  const auto& last = profiles.back();
  const auto& prev = profiles[profiles.size() - 2];
  est.mu.assign(last.mu_profile.begin(), last.mu_profile.begin() + (J - 1));
  est.normalization = 0.0;
  for (double p : last.last_merger_law) est.normalization += p;
  for (int i = J + 1; i <= last.n; ++i) est.tail_mass += last.last_merger(i);
  for (int i = 2; i <= J; ++i) {
    const double a = last.mu(i);
    const double b = prev.mu(i);
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale > 0.0) est.sup_rel_diff = std::max(est.sup_rel_diff, std::abs(a - b) / scale);
  }

  bool peak_falling = true;
  for (std::size_t m = 1; m < est.peak_limit_prob.size(); ++m)
    peak_falling = peak_falling && est.peak_limit_prob[m] <= est.peak_limit_prob[m - 1];
  const bool positive = std::all_of(est.mu.begin(), est.mu.end(), [](double x) { return x > 0.0; });
  if (est.peak_limit_prob.back() < options.divergence_level && peak_falling) {
    est.verdict = Verdict::diverging_to_infinity;
  } else if (positive && est.sup_rel_diff <= options.tolerance) {
    est.verdict = Verdict::converged;
  } else {
    est.verdict = Verdict::non_convergent;
  }
  est.profile = last;
  return est;
}

struct ResidualReport {
  double max_residual = 0.0;
  int worst_i = 0;
  double tail_share = 0.0;  // largest share of inflow coming from the top quarter of the supplied range
  bool tail_flag = false;   // tail_share above 1e-3: truncation may matter
};

/// Relative residual of sum_{j>i} mu_j rho_{ji} = mu_i rho_i for 2 <= i <= J/2.
/// `mu` holds mu_i for i = 2..M with M >= J; inflow sums run over all supplied
/// entries and everything beyond M is treated as zero.
inline ResidualReport residual_check(const LambdaSpec& spec, const std::vector<double>& mu, int J) {
  const int M = static_cast<int>(mu.size()) + 1;
  if (J < 4) throw std::invalid_argument("residual_check: need J >= 4");
  if (M < J) throw std::invalid_argument("residual_check: mu shorter than J");
  const int top = J / 2;
  for (int i = 2; i <= top; ++i)
    if (!(mu[static_cast<std::size_t>(i - 2)] > 0.0))
      throw std::invalid_argument("residual_check: mu must be positive on 2..J/2");
  const RateModel model(spec, M);
  const auto& lf = model.log_factorial();
  std::vector<double> inflow(static_cast<std::size_t>(top) + 1, 0.0);
  std::vector<double> inflow_top(static_cast<std::size_t>(top) + 1, 0.0);
  const int quarter = M - std::max(1, (M - 1) / 4);
  for (int j = 3; j <= M; ++j) {
    const double mj = mu[static_cast<std::size_t>(j - 2)];
    if (mj == 0.0) continue;
    for (int i = 2; i <= std::min(top, j - 1); ++i) {
      const int k = j - i + 1;
      const double lam = model.log_lambda(j, k);
      if (lam == kNegInf) continue;
      const double flow = mj * std::exp(lf.log_binomial(j, k) + lam);
      inflow[static_cast<std::size_t>(i)] += flow;
      if (j > quarter) inflow_top[static_cast<std::size_t>(i)] += flow;
    }
  }
  ResidualReport r;
  std::vector<double> scratch(static_cast<std::size_t>(top));
  for (int i = 2; i <= top; ++i) {
    const double out = mu[static_cast<std::size_t>(i - 2)] * std::exp(model.log_rho_row(i, scratch));
    const double in = inflow[static_cast<std::size_t>(i)];
    const double res = std::abs(in - out) / out;
    if (res > r.max_residual) {
      r.max_residual = res;
      r.worst_i = i;
    }
    if (in > 0.0) r.tail_share = std::max(r.tail_share, inflow_top[static_cast<std::size_t>(i)] / in);
  }
  r.tail_flag = r.tail_share > 1e-3;
  return r;
}

}  // namespace lcoal
