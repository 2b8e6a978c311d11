#pragma once

// Closed-form limit laws: Kingman and Beta(2 - alpha, alpha) coalescents.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcoal/numeric.hpp"

namespace lcoal {

struct LimitLaw {
  std::string family;  // "kingman" or "beta"
  double alpha = 0.0;
  std::vector<double> probs;  // P(L_inf = i), i = 2..J
  double tail_bound = 0.0;    // 1 - sum(probs)

  int J() const { return static_cast<int>(probs.size()) + 1; }
  double prob(int i) const { return probs[static_cast<std::size_t>(i - 2)]; }
};

/// mu_i = 2 / (i (i - 1)).
inline std::vector<double> kingman_invariant(int J) {
  if (J < 2) throw std::invalid_argument("kingman_invariant: need J >= 2");
  std::vector<double> mu;
  for (int i = 2; i <= J; ++i) mu.push_back(2.0 / (static_cast<double>(i) * (i - 1)));
  return mu;
}

inline LimitLaw kingman_limit_law(int J) {
  if (J < 2) throw std::invalid_argument("kingman_limit_law: need J >= 2");
  LimitLaw law;
  law.family = "kingman";
  law.probs.assign(static_cast<std::size_t>(J - 1), 0.0);
  law.probs[0] = 1.0;
  return law;
}

/// P(L_inf = i) for the Beta(2 - alpha, alpha) coalescent.
///
/// alpha != 1: alpha * Gamma(i-alpha) / (Gamma(i) Gamma(1-alpha)) * int x^{i-1} / (1 - (1-x)^{1-alpha}) dx
/// alpha == 1: -1/(i-1) * int x^{i-1} / log(1-x) dx
inline LimitLaw beta_limit_law(double alpha, int J) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("beta_limit_law: alpha must lie in (0, 2)");
  if (J < 2) throw std::invalid_argument("beta_limit_law: need J >= 2");
  LimitLaw law;
  law.family = "beta";
  law.alpha = alpha;
  const bool bs = alpha == 1.0;
  const double e = 1.0 - alpha;
  double sum = 0.0;
  for (int i = 2; i <= J; ++i) {
    const int m = i - 1;
    // x^{m} / denominator with the removable singularity at 0 patched by its limit
    const auto integrand = [&](double x) {
      const double l = std::log1p(-x);
      if (bs) {
        if (x < 1e-300) return m == 1 ? -1.0 : 0.0;
        return std::pow(x, m) / l;
      }
      const double d = -std::expm1(e * l);
      if (x < 1e-300 || d == 0.0) return m == 1 ? 1.0 / e : 0.0;
      return std::pow(x, m) / d;
    };
    const auto q = integrate(integrand, 0.0, 1.0, 1e-13, 1e-300);
    double p;
    if (bs) {
      p = -q.value / m;
    } else {
      const double sign = e > 0.0 ? 1.0 : -1.0;
      p = alpha * sign * std::exp(std::lgamma(i - alpha) - std::lgamma(e) - std::lgamma(static_cast<double>(i))) *
          q.value;
    }
    law.probs.push_back(p);
    sum += p;
  }
  law.tail_bound = 1.0 - sum;
  return law;
}

/// log lambda_{i,i} = log B(i - alpha, alpha) - log B(2 - alpha, alpha).
inline double beta_log_lambda_ii(double alpha, int i) { return log_beta(i - alpha, alpha) - log_beta(2.0 - alpha, alpha); }

/// mu_i = P(L_inf = i) / lambda_{i,i}, i = 2..J.
inline std::vector<double> beta_mu_from_limit(double alpha, int J) {
  const auto law = beta_limit_law(alpha, J);
  std::vector<double> mu;
  for (int i = 2; i <= J; ++i) mu.push_back(std::exp(std::log(law.prob(i)) - beta_log_lambda_ii(alpha, i)));
  return mu;
}

}  // namespace lcoal
