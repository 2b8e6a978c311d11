#pragma once

// Goodness-of-fit and interval helpers for the Monte Carlo checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "lcoal/numeric.hpp"

namespace lcoal {

struct Interval {
  double lo;
  double hi;
};

inline double normal_quantile_two_sided(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must be in (0, 1)");
  return boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + confidence));
}

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::int64_t successes, std::int64_t trials, double confidence) {
  if (trials <= 0) return {0.0, 1.0};
  const double z = normal_quantile_two_sided(confidence);
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  int bins = 0;
};

/// Pearson goodness-of-fit of `observed` counts against probabilities
/// `expected_prob` (same indexing). Categories with expected count below
/// `min_expected` are pooled into one bin; `expected_prob` may sum to less
/// than one, in which case the remainder forms an extra "other" category whose
/// observed count is `observed_other`.
inline ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed, std::span<const double> expected_prob,
                                      std::int64_t observed_other = 0, double min_expected = 5.0) {
  if (observed.size() != expected_prob.size()) throw std::invalid_argument("chi_square_gof: size mismatch");
  std::int64_t total = observed_other;
  double prob_sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    total += observed[i];
    prob_sum += expected_prob[i];
  }
  ChiSquareResult r;
  if (total == 0) return r;
  const double n = static_cast<double>(total);
  struct Bin {
    double obs;
    double exp;
  };
  std::vector<Bin> bins;
  Bin pooled{static_cast<double>(observed_other), std::max(0.0, 1.0 - prob_sum) * n};
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_prob[i] * n;
    if (e >= min_expected) {
      bins.push_back({static_cast<double>(observed[i]), e});
    } else {
      pooled.obs += static_cast<double>(observed[i]);
      pooled.exp += e;
    }
  }
  if (pooled.exp >= min_expected || bins.empty()) {
    if (pooled.exp > 0.0 || pooled.obs > 0.0) bins.push_back(pooled);
  } else if (pooled.exp > 0.0 || pooled.obs > 0.0) {
    // Too small to stand alone: fold into the smallest regular bin.
    auto smallest = std::min_element(bins.begin(), bins.end(), [](const Bin& x, const Bin& y) { return x.exp < y.exp; });
    smallest->obs += pooled.obs;
    smallest->exp += pooled.exp;
  }
  r.bins = static_cast<int>(bins.size());
  for (const auto& bin : bins) {
    if (bin.exp <= 0.0) {
      if (bin.obs > 0.0) r.statistic = kPosInf;
      continue;
    }
    const double d = bin.obs - bin.exp;
    r.statistic += d * d / bin.exp;
  }
  r.df = r.bins - 1;
  if (!std::isfinite(r.statistic)) {
    r.p_value = 0.0;
  } else if (r.df <= 0) {
    r.p_value = r.statistic > 1e-9 ? 0.0 : 1.0;
  } else {
    r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.df), r.statistic));
  }
  return r;
}

/// P(K > x) for the Kolmogorov distribution.
inline double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov test of values against Uniform(0,1), with
/// Stephens' finite-sample correction of the asymptotic p-value.
inline KsResult ks_uniform(std::vector<double> values) {
  KsResult r;
  r.n = values.size();
  if (values.empty()) return r;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

/// Inverse-ECDF quantile of sorted data: smallest x with F_n(x) >= level.
inline double empirical_quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw std::invalid_argument("empirical_quantile_sorted: empty sample");
  const double pos = std::ceil(level * static_cast<double>(sorted.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(sorted.size())));
  return sorted[idx - 1];
}

/// Distribution-free confidence interval for a quantile from order statistics
/// (normal approximation to the binomial rank).
inline Interval quantile_interval_sorted(std::span<const double> sorted, double level, double confidence) {
  const double n = static_cast<double>(sorted.size());
  const double z = normal_quantile_two_sided(confidence);
  const double centre = level * n;
  const double half = z * std::sqrt(n * level * (1.0 - level));
  const auto pick = [&](double rank) {
    const auto idx = static_cast<std::size_t>(std::clamp(std::ceil(rank), 1.0, n));
    return sorted[idx - 1];
  };
  return {pick(centre - half), pick(centre + half + 1.0)};
}

}  // namespace lcoal
