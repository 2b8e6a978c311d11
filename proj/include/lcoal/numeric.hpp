#pragma once

// Log-space arithmetic and quadrature used throughout the rate layer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

namespace lcoal {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  if (m == kPosInf) return kPosInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Table of log(k!) for k = 0..max_k.
class LogFactorial {
 public:
  explicit LogFactorial(int max_k = 0) { reserve(max_k); }

  void reserve(int max_k) {
    const auto old = static_cast<int>(table_.size());
    if (max_k < old) return;
    table_.resize(static_cast<std::size_t>(max_k) + 1);
    for (int k = old; k <= max_k; ++k)
      table_[static_cast<std::size_t>(k)] = std::lgamma(static_cast<double>(k) + 1.0);
  }

  int max_k() const { return static_cast<int>(table_.size()) - 1; }

  double operator()(int k) const { return table_[static_cast<std::size_t>(k)]; }

  double log_binomial(int n, int k) const {
    if (k < 0 || k > n) return kNegInf;
    return (*this)(n) - (*this)(k) - (*this)(n - k);
  }

 private:
  std::vector<double> table_;
};

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208980614211, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk21(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kWgk[10];
  double resg = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double dx = h * kXgk[j];
    const double fsum = f(c - dx) + f(c + dx);
    resk += kWgk[j] * fsum;
    if (j % 2 == 1) resg += kWg[j / 2] * fsum;
  }
  return {a, b, resk * h, std::abs((resk - resg) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (G10/K21) integration of f over [a, b].
///
/// The rule never samples the endpoints, so integrable endpoint singularities
/// are handled by repeated bisection of the worst segment.
template <class F>
QuadratureResult integrate(const F& f, double a, double b, double rel_tol = 1e-12,
                           double abs_tol = 0.0, int max_intervals = 4000) {
  if (!(a < b)) {
    if (a == b) return {0.0, 0.0, 0, true};
    auto r = integrate(f, b, a, rel_tol, abs_tol, max_intervals);
    r.value = -r.value;
    return r;
  }
  std::priority_queue<detail::Segment> work;
  auto first = detail::gk21(f, a, b);
  double total = first.value;
  double total_err = first.error;
  work.push(first);
  int count = 1;
  while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) && count < max_intervals) {
    const auto worst = work.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) break;  // segment below resolution
    work.pop();
    auto left = detail::gk21(f, worst.a, mid);
    auto right = detail::gk21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    work.push(left);
    work.push(right);
    ++count;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  double value = 0.0;
  double err = 0.0;
  while (!work.empty()) {
    value += work.top().value;
    err += work.top().error;
    work.pop();
  }
  return {value, err, count, err <= std::max(abs_tol, rel_tol * std::abs(value))};
}

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

template <class F>
double integrate_fixed(const GaussLegendreRule& rule, const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(c + h * rule.nodes[i]);
  return s * h;
}

}  // namespace lcoal
