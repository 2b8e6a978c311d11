#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's rate code: rates are evaluated in linear space with std::beta and
// std::pow, and integrals go through Boost quadrature.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lcoal/lambda_measure.hpp"

namespace oracle {

using lcoal::LambdaSpec;

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// lambda_{b,k} in linear space.
inline double lambda(const LambdaSpec& spec, int b, int k) {
  double v = k == 2 ? spec.kingman_mass() : 0.0;
  for (const auto& a : spec.atom_list()) v += a.mass * std::pow(a.position, k - 2) * std::pow(1.0 - a.position, b - k);
  if (const auto& be = spec.beta_component())
    v += be->scale * std::beta(k - 2 + be->a, b - k + be->b) / std::beta(be->a, be->b);
  return v;
}

/// rho_{b,j}: rate of b -> j.
inline double rho(const LambdaSpec& spec, int b, int j) { return binom(b, b - j + 1) * lambda(spec, b, b - j + 1); }

inline double rho_total(const LambdaSpec& spec, int b) {
  double s = 0.0;
  for (int j = 1; j < b; ++j) s += rho(spec, b, j);
  return s;
}

/// P(L_n = i) by summing the probability of every decreasing path n -> ... -> 1.
inline std::vector<double> enumerate_last_merger(const LambdaSpec& spec, int n) {
  std::vector<double> law(static_cast<std::size_t>(n + 1), 0.0);
  std::function<void(int, double)> walk = [&](int b, double prob) {
    const double total = rho_total(spec, b);
    for (int j = 1; j < b; ++j) {
      const double p = prob * rho(spec, b, j) / total;
      if (p == 0.0) continue;
      if (j == 1) {
        law[static_cast<std::size_t>(b)] += p;
      } else {
        walk(j, p);
      }
    }
  };
  walk(n, 1.0);
  return law;  // indexed by i
}

/// Probability of visiting each state, by path enumeration.
inline std::vector<double> enumerate_hits(const LambdaSpec& spec, int n) {
  std::vector<double> hit(static_cast<std::size_t>(n + 1), 0.0);
  std::function<void(int, double)> walk = [&](int b, double prob) {
    hit[static_cast<std::size_t>(b)] += prob;
    if (b == 1) return;
    const double total = rho_total(spec, b);
    for (int j = 1; j < b; ++j) {
      const double p = prob * rho(spec, b, j) / total;
      if (p > 0.0) walk(j, p);
    }
  };
  walk(n, 1.0);
  return hit;
}

/// Integral of g(p) Lambda(dp) over (0, 1] excluding the Kingman atom, by
/// Gauss-Kronrod for the Beta density.
inline double integrate_regular(const LambdaSpec& spec, const std::function<double(double)>& g) {
  double v = 0.0;
  for (const auto& a : spec.atom_list()) v += a.mass * g(a.position);
  if (const auto& be = spec.beta_component()) {
    const double norm = be->scale / std::beta(be->a, be->b);
    auto integrand = [&](double p) {
      if (p <= 0.0 || p >= 1.0) return 0.0;
      const double v = g(p) * norm * std::pow(p, be->a - 1.0) * std::pow(1.0 - p, be->b - 1.0);
      // abscissae within a few ulps of an endpoint can give inf * 0
      return std::isfinite(v) ? v : 0.0;
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    v += ts.integrate(integrand, 0.0, 1.0);
  }
  return v;
}

/// rho(b) = int (1 - (1-p)^b) Lambda(dp) / p^2 for a measure without a Kingman part.
inline double event_rate(const LambdaSpec& spec, int b) {
  return integrate_regular(spec, [b](double p) { return -std::expm1(b * std::log1p(-p)) / (p * p); });
}

/// A battery of 20 measures covering every component type.
inline std::vector<LambdaSpec> battery() {
  using lcoal::Atom;
  using lcoal::BetaComponent;
  return {
      LambdaSpec::kingman(),
      LambdaSpec::kingman(2.5),
      LambdaSpec::star(),
      LambdaSpec::eldon_wakeley(0.2),
      LambdaSpec::eldon_wakeley(std::exp(-1.0)),
      LambdaSpec::eldon_wakeley(0.7),
      LambdaSpec::beta_alpha(0.3),
      LambdaSpec::beta_alpha(0.5),
      LambdaSpec::beta(1.0, 1.0),
      LambdaSpec::beta_alpha(1.5),
      LambdaSpec::beta_alpha(1.8),
      LambdaSpec::beta(3.0, 1.0),
      LambdaSpec::beta(2.5, 2.0, 0.5),
      LambdaSpec::beta(0.7, 0.4),
      LambdaSpec(1.0, {}, BetaComponent{1.0, 1.0, 1.0}),
      LambdaSpec::atoms({{0.3, 0.5}, {0.6, 0.25}}),
      LambdaSpec(0.0, {{1.0, 0.5}}, BetaComponent{1.0, 1.0, 1.0}),
      LambdaSpec(0.5, {{0.5, 1.0}}, std::nullopt),
      LambdaSpec::atoms({{0.1, 0.2}, {0.45, 0.3}, {0.9, 0.4}}),
      LambdaSpec(0.0, {{0.9, 0.3}}, BetaComponent{5.0, 2.0, 0.5}),
  };
}

}  // namespace oracle
