#pragma once

// Merger rates lambda_{b,k}, jump rates rho_{b,j}, and the dust drift f(y).
//
// All rate arithmetic is in log space. A RateModel precomputes log-gamma
// tables up to a fixed number of blocks so that rows are table lookups.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lcoal/lambda_measure.hpp"
#include "lcoal/numeric.hpp"

namespace lcoal {

/// Rates out of a state with b blocks.
struct RateRow {
  int b = 0;
  std::vector<double> log_lambda;  // index k-2 for k = 2..b
  std::vector<double> log_rho;     // index j-1 for j = 1..b-1
  double log_rho_total = kNegInf;
  double log_event_rate = kPosInf;  // +inf when the event rate diverges

  double lambda(int k) const { return std::exp(log_lambda[static_cast<std::size_t>(k - 2)]); }
  double rho(int j) const { return std::exp(log_rho[static_cast<std::size_t>(j - 1)]); }
  double rho_total() const { return std::exp(log_rho_total); }
  /// Embedded-chain transition probability b -> j.
  double transition(int j) const { return std::exp(log_rho[static_cast<std::size_t>(j - 1)] - log_rho_total); }
};

class RateModel {
 public:
  RateModel(const LambdaSpec& spec, int b_max) : spec_(spec), b_max_(std::max(b_max, 2)), lf_(b_max_) {
    for (const auto& atom : spec_.atom_list()) {
      log_p_.push_back(std::log(atom.position));
      log_q_.push_back(atom.position == 1.0 ? kNegInf : std::log1p(-atom.position));
      log_w_.push_back(std::log(atom.mass));
    }
    if (const auto& beta = spec_.beta_component()) {
      const auto size = static_cast<std::size_t>(b_max_) + 1;
      lg_a_.resize(size);
      lg_b_.resize(size);
      lg_ab_.resize(size);
      for (std::size_t m = 0; m < size; ++m) {
        lg_a_[m] = std::lgamma(static_cast<double>(m) + beta->a);
        lg_b_[m] = std::lgamma(static_cast<double>(m) + beta->b);
        lg_ab_[m] = std::lgamma(static_cast<double>(m) + beta->a + beta->b);
      }
      log_beta_norm_ = std::log(beta->scale) - log_beta(beta->a, beta->b);
    }
    conditions_ = check_conditions(spec_);
  }

  const LambdaSpec& spec() const { return spec_; }
  const ConditionReport& conditions() const { return conditions_; }
  int b_max() const { return b_max_; }
  const LogFactorial& log_factorial() const { return lf_; }

  /// log lambda_{b,k}. Kept in log space: lambda_{b,k} itself may underflow
  /// while binomial(b,k) lambda_{b,k} does not.
  double log_lambda(int b, int k) const {
    check_bk(b, k);
    double acc = kNegInf;
    if (k == 2 && spec_.kingman_mass() > 0.0) acc = std::log(spec_.kingman_mass());
    const auto& atoms = spec_.atom_list();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      double term;
      if (atoms[i].position == 1.0) {
        term = k == b ? log_w_[i] : kNegInf;
      } else {
        term = log_w_[i] + (k - 2) * log_p_[i] + (b - k) * log_q_[i];
      }
      acc = log_add_exp(acc, term);
    }
    if (spec_.beta_component()) {
      // B(k-2+a, b-k+b') / B(a, b')
      const auto m1 = static_cast<std::size_t>(k - 2);
      const auto m2 = static_cast<std::size_t>(b - k);
      const auto m3 = static_cast<std::size_t>(b - 2);
      acc = log_add_exp(acc, log_beta_norm_ + lg_a_[m1] + lg_b_[m2] - lg_ab_[m3]);
    }
    return acc;
  }

  /// log of int p^-1 (1-p)^{b-1} Lambda(dp), the one-participant term of the
  /// event rate. +inf without dust.
  double log_singleton_rate(int b) const {
    if (!conditions_.has_dust) return kPosInf;
    double acc = kNegInf;
    const auto& atoms = spec_.atom_list();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (atoms[i].position == 1.0) continue;  // (1-p)^{b-1} = 0 for b >= 2
      acc = log_add_exp(acc, log_w_[i] - log_p_[i] + (b - 1) * log_q_[i]);
    }
    if (const auto& beta = spec_.beta_component()) {
      const double a = beta->a;
      const double bb = beta->b;
      acc = log_add_exp(acc, log_beta_norm_ + std::lgamma(a - 1.0) + lg_b_[static_cast<std::size_t>(b - 1)] -
                                 std::lgamma(a - 1.0 + b - 1.0 + bb));
    }
    return acc;
  }

  /// Fills out[j-1] = log rho_{b,j} for j = 1..b-1 and returns log rho_b.
  double log_rho_row(int b, std::span<double> out) const {
    if (static_cast<int>(out.size()) < b - 1) throw std::invalid_argument("log_rho_row: output span too short");
    for (int j = 1; j < b; ++j) {
      const int k = b - j + 1;
      const double lam = log_lambda(b, k);
      out[static_cast<std::size_t>(j - 1)] = lam == kNegInf ? kNegInf : lf_.log_binomial(b, k) + lam;
    }
    return log_sum_exp(out.first(static_cast<std::size_t>(b - 1)));
  }

  RateRow row(int b) const {
    check_bk(b, 2);
    RateRow r;
    r.b = b;
    r.log_lambda.resize(static_cast<std::size_t>(b - 1));
    for (int k = 2; k <= b; ++k) r.log_lambda[static_cast<std::size_t>(k - 2)] = log_lambda(b, k);
    r.log_rho.resize(static_cast<std::size_t>(b - 1));
    for (int j = 1; j < b; ++j) {
      const double lam = r.log_lambda[static_cast<std::size_t>(b - j - 1)];
      r.log_rho[static_cast<std::size_t>(j - 1)] =
          lam == kNegInf ? kNegInf : lf_.log_binomial(b, b - j + 1) + lam;
    }
    r.log_rho_total = log_sum_exp(r.log_rho);
    r.log_event_rate = log_event_rate(b, r.log_rho_total);
    return r;
  }

  /// log rho(b) = log int (1-(1-p)^b) Lambda(dp)/p^2, via rho_b + b * singleton term.
  double log_event_rate(int b, double log_rho_total) const {
    if (!conditions_.has_dust) return kPosInf;
    return log_add_exp(log_rho_total, std::log(static_cast<double>(b)) + log_singleton_rate(b));
  }

 private:
  void check_bk(int b, int k) const {
    if (b < 2 || b > b_max_)
      throw std::out_of_range("rates: b=" + std::to_string(b) + " outside [2, " + std::to_string(b_max_) + "]");
    if (k < 2 || k > b)
      throw std::invalid_argument("rates: k=" + std::to_string(k) + " outside [2, b=" + std::to_string(b) + "]");
  }

  LambdaSpec spec_;
  int b_max_;
  LogFactorial lf_;
  std::vector<double> log_p_, log_q_, log_w_;
  std::vector<double> lg_a_, lg_b_, lg_ab_;
  double log_beta_norm_ = 0.0;
  ConditionReport conditions_;
};

/// log lambda_{b,k} = log int p^{k-2} (1-p)^{b-k} Lambda(dp).
inline double log_lambda_bk(const LambdaSpec& spec, int b, int k) {
  if (k < 2 || k > b) throw std::invalid_argument("lambda_bk: need 2 <= k <= b");
  return RateModel(spec, b).log_lambda(b, k);
}

inline double lambda_bk(const LambdaSpec& spec, int b, int k) { return std::exp(log_lambda_bk(spec, b, k)); }

inline RateRow rate_row(const LambdaSpec& spec, int b) {
  if (b < 2) throw std::invalid_argument("rate_row: need b >= 2");
  return RateModel(spec, b).row(b);
}

/// max_k |lambda_{b,k} - lambda_{b+1,k} - lambda_{b+1,k+1}| / lambda_{b,k}.
inline double consistency_residual(const RateModel& model, int b) {
  double worst = 0.0;
  for (int k = 2; k <= b; ++k) {
    const double here = model.log_lambda(b, k);
    if (here == kNegInf) continue;
    const double rhs = log_add_exp(model.log_lambda(b + 1, k), model.log_lambda(b + 1, k + 1));
    // |1 - exp(rhs - here)| keeps the ratio well scaled for tiny rates.
    worst = std::max(worst, std::abs(std::expm1(rhs - here)));
  }
  return worst;
}

inline double consistency_residual(const LambdaSpec& spec, int b) {
  if (b < 2) throw std::invalid_argument("consistency_residual: need b >= 2");
  return consistency_residual(RateModel(spec, b + 1), b);
}

/// f(y) = int (1 - (1-p)^{e^y}) / e^y * Lambda(dp) / p^2. Requires dust.
inline double drift_f(const LambdaSpec& spec, const ConditionReport& cond, double y) {
  if (!cond.has_dust) throw std::domain_error("drift_f: measure has no dust component");
  const double z = std::exp(y);
  // (1 - (1-p)^z) / z, stable for small p and small z
  const auto kernel = [z](double p) {
    if (p >= 1.0) return 1.0 / z;
    return -std::expm1(z * std::log1p(-p)) / z;
  };
  double f = 0.0;
  for (const auto& atom : spec.atom_list())
    f += atom.mass * kernel(atom.position) / (atom.position * atom.position);
  if (const auto& beta = spec.beta_component()) {
    const double a = beta->a;
    const double b = beta->b;
    const double log_norm = std::log(beta->scale) - log_beta(a, b);
    // pc is the distance to the nearer endpoint, so log(1-p) stays accurate near 1
    const auto integrand = [&](double p, double pc) {
      if (p <= 0.0 || (p > 0.5 && pc <= 0.0)) return 0.0;
      const double log_q = p <= 0.5 ? std::log1p(-p) : std::log(pc);
      const double k = -std::expm1(z * log_q) / z;
      return std::exp(std::log(k) + log_norm + (a - 3.0) * std::log(p) + (b - 1.0) * log_q);
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    f += ts.integrate(integrand, 0.0, 1.0, 1e-14);
  }
  return f;
}

inline double drift_f(const LambdaSpec& spec, double y) { return drift_f(spec, check_conditions(spec), y); }

/// rho(b) = int (1 - (1-p)^b) Lambda(dp) / p^2, the rate of Poisson events that
/// touch at least one of b lines. +inf without dust.
inline double event_rate(const LambdaSpec& spec, int b) { return std::exp(rate_row(spec, b).log_event_rate); }

/// Produces log lambda rows for b = n, n-1, ..., 2 from a seed row at n using
/// lambda_{b,k} = lambda_{b+1,k} + lambda_{b+1,k+1}. Only additions of
/// positive terms are involved.
class DescendingRows {
 public:
  /// Seed from a row of log lambda_{n,k}, k = 2..n.
  explicit DescendingRows(std::vector<double> seed_log_lambda)
      : current_(std::move(seed_log_lambda)), b_(static_cast<int>(current_.size()) + 1) {
    if (b_ < 2) throw std::invalid_argument("DescendingRows: empty seed row");
  }

  /// Seed row from the closed-form rates.
  static DescendingRows from_model(const RateModel& model, int n) {
    std::vector<double> seed(static_cast<std::size_t>(n - 1));
    for (int k = 2; k <= n; ++k) seed[static_cast<std::size_t>(k - 2)] = model.log_lambda(n, k);
    return DescendingRows(std::move(seed));
  }

  /// Seed row by adaptive quadrature of p^{k-2}(1-p)^{n-k} against the Beta
  /// density, plus exact atom and Kingman terms.
  static DescendingRows from_quadrature(const LambdaSpec& spec, int n) {
    std::vector<double> seed(static_cast<std::size_t>(n - 1));
    std::optional<RateModel> atoms_only;
    if (!spec.atom_list().empty() || spec.kingman_mass() > 0.0)
      atoms_only.emplace(LambdaSpec(spec.kingman_mass(), spec.atom_list(), std::nullopt), n);
    for (int k = 2; k <= n; ++k) {
      double v = atoms_only ? atoms_only->log_lambda(n, k) : kNegInf;
      if (const auto& beta = spec.beta_component()) {
        const double a = beta->a;
        const double bb = beta->b;
        const double log_norm = std::log(beta->scale) - log_beta(a, bb);
        const auto integrand = [&](double p) {
          return std::exp(log_norm + (k - 2 + a - 1.0) * std::log(p) + (n - k + bb - 1.0) * std::log1p(-p));
        };
        const auto q = integrate(integrand, 0.0, 1.0, 1e-13);
        v = log_add_exp(v, q.value > 0.0 ? std::log(q.value) : kNegInf);
      }
      seed[static_cast<std::size_t>(k - 2)] = v;
    }
    return DescendingRows(std::move(seed));
  }

  int b() const { return b_; }
  /// log lambda_{b,k} for k = 2..b at the current b.
  const std::vector<double>& log_lambda() const { return current_; }

  /// Steps from b to b-1. Returns false once b = 2.
  bool step() {
    if (b_ <= 2) return false;
    std::vector<double> next(static_cast<std::size_t>(b_ - 2));
    for (int k = 2; k <= b_ - 1; ++k) {
      const auto i = static_cast<std::size_t>(k - 2);
      next[i] = log_add_exp(current_[i], current_[i + 1]);
    }
    current_ = std::move(next);
    --b_;
    return true;
  }

 private:
  std::vector<double> current_;
  int b_;
};

}  // namespace lcoal
