#pragma once

// The driving measure Lambda on [0,1] and its structural conditions.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "json.hpp"
#include "lcoal/numeric.hpp"

namespace lcoal {

struct Atom {
  double position;  // p in (0, 1]
  double mass;      // w > 0
};

/// scale * Beta(a, b) density on (0, 1).
struct BetaComponent {
  double a;
  double b;
  double scale;
};

/// A finite nonzero measure: Kingman atom at 0, point masses, one Beta density.
class LambdaSpec {
 public:
  LambdaSpec(double kingman_mass, std::vector<Atom> atoms, std::optional<BetaComponent> beta)
      : kingman_(kingman_mass), atoms_(std::move(atoms)), beta_(beta) {
    if (!(kingman_ >= 0.0) || !std::isfinite(kingman_))
      throw std::invalid_argument("LambdaSpec: kingman mass must be finite and >= 0");
    double prev = 0.0;
    for (const auto& atom : atoms_) {
      if (!(atom.position > 0.0 && atom.position <= 1.0))
        throw std::invalid_argument("LambdaSpec: atom positions must lie in (0, 1]");
      if (!(atom.mass > 0.0) || !std::isfinite(atom.mass))
        throw std::invalid_argument("LambdaSpec: atom masses must be finite and > 0");
      if (!(atom.position > prev))
        throw std::invalid_argument("LambdaSpec: atom positions must be strictly increasing");
      prev = atom.position;
    }
    if (beta_) {
      if (!(beta_->a > 0.0) || !(beta_->b > 0.0) || !std::isfinite(beta_->a) || !std::isfinite(beta_->b))
        throw std::invalid_argument("LambdaSpec: Beta parameters must be finite and > 0");
      if (!(beta_->scale >= 0.0) || !std::isfinite(beta_->scale))
        throw std::invalid_argument("LambdaSpec: Beta scale must be finite and >= 0");
      if (beta_->scale == 0.0) beta_.reset();
    }
    total_ = kingman_;
    for (const auto& atom : atoms_) total_ += atom.mass;
    if (beta_) total_ += beta_->scale;
    if (!(total_ > 0.0)) throw std::invalid_argument("LambdaSpec: total mass must be > 0");
  }

  static LambdaSpec kingman(double mass = 1.0) { return {mass, {}, std::nullopt}; }
  static LambdaSpec beta(double a, double b, double scale = 1.0) {
    return {0.0, {}, BetaComponent{a, b, scale}};
  }
  /// Beta(2 - alpha, alpha), alpha in (0, 2).
  static LambdaSpec beta_alpha(double alpha) { return beta(2.0 - alpha, alpha); }
  static LambdaSpec atoms(std::vector<Atom> atoms) { return {0.0, std::move(atoms), std::nullopt}; }
  /// Eldon-Wakeley measure p^2 delta_p.
  static LambdaSpec eldon_wakeley(double p) { return atoms({{p, p * p}}); }
  /// Star coalescent: everything merges at once.
  static LambdaSpec star(double mass = 1.0) { return atoms({{1.0, mass}}); }

  double kingman_mass() const { return kingman_; }
  const std::vector<Atom>& atom_list() const { return atoms_; }
  const std::optional<BetaComponent>& beta_component() const { return beta_; }
  double total_mass() const { return total_; }
  /// Lambda((0,1]).
  double regular_mass() const { return total_ - kingman_; }
  bool purely_atomic() const { return kingman_ == 0.0 && !beta_ && !atoms_.empty(); }
  bool has_atom_at_one() const { return !atoms_.empty() && atoms_.back().position == 1.0; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kingman"] = kingman_;
    j["atoms"] = nlohmann::json::array();
    for (const auto& atom : atoms_) j["atoms"].push_back({atom.position, atom.mass});
    if (beta_) j["beta"] = {{"a", beta_->a}, {"b", beta_->b}, {"scale", beta_->scale}};
    return j;
  }

  /// Parses {"kingman": m, "atoms": [[p,w],...], "beta": {"a":..,"b":..,"scale":..}}.
  static LambdaSpec from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("measure: expected a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (key != "kingman" && key != "atoms" && key != "beta")
        throw std::invalid_argument("measure: unknown key '" + key + "'");
    }
    double kingman = 0.0;
    if (j.contains("kingman")) {
      if (!j["kingman"].is_number()) throw std::invalid_argument("measure: 'kingman' must be a number");
      kingman = j["kingman"].get<double>();
    }
    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
      if (!j["atoms"].is_array()) throw std::invalid_argument("measure: 'atoms' must be an array");
      for (const auto& entry : j["atoms"]) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() || !entry[1].is_number())
          throw std::invalid_argument("measure: each atom must be [position, mass]");
        atoms.push_back({entry[0].get<double>(), entry[1].get<double>()});
      }
    }
    std::optional<BetaComponent> beta;
    if (j.contains("beta") && !j["beta"].is_null()) {
      const auto& b = j["beta"];
      if (!b.is_object() || !b.contains("a") || !b.contains("b"))
        throw std::invalid_argument("measure: 'beta' needs numeric 'a' and 'b'");
      beta = BetaComponent{b.at("a").get<double>(), b.at("b").get<double>(),
                           b.contains("scale") ? b.at("scale").get<double>() : 1.0};
    }
    return {kingman, std::move(atoms), beta};
  }

 private:
  double kingman_;
  std::vector<Atom> atoms_;
  std::optional<BetaComponent> beta_;
  double total_ = 0.0;
};

enum class Trichotomy { yes, no, undecided };

inline const char* to_string(Trichotomy t) {
  switch (t) {
    case Trichotomy::yes: return "yes";
    case Trichotomy::no: return "no";
    case Trichotomy::undecided: return "undecided";
  }
  return "undecided";
}

struct ConditionReport {
  bool has_dust = false;
  bool log_condition = false;
  double log_one_minus_p_integral = 0.0;  // int |log(1-p)| Lambda(dp)
  double inverse_p_integral = 0.0;        // int p^-1 Lambda(dp)
  double intensity_integral = 0.0;        // int p^-2 Lambda(dp)
  Trichotomy log_nonlattice = Trichotomy::undecided;
  bool star_atom = false;  // atom at p = 1
};

namespace detail {

struct Rational {
  std::int64_t num;
  std::int64_t den;
};

/// Best continued-fraction convergent of x with denominator <= max_den.
inline Rational best_rational(double x, std::int64_t max_den) {
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double fl = std::floor(r);
    if (std::abs(fl) > 9e15) break;
    const auto a = static_cast<std::int64_t>(fl);
    const std::int64_t k2 = a * k1 + k0;
    if (k2 > max_den) break;
    const std::int64_t h2 = a * h1 + h0;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double frac = r - fl;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return {h1, k1};
}

}  // namespace detail

/// Commensurability test for the jump sizes -log(1 - p_i) of a purely atomic
/// measure. Returns `no` (lattice) when every ratio to the first jump is within
/// 1e-9 of a rational with denominator <= 1e6 and the common grid refinement
/// stays within that bound, `undecided` otherwise.
inline Trichotomy atomic_log_nonlattice(const std::vector<Atom>& atoms) {
  std::vector<double> jumps;
  for (const auto& atom : atoms) {
    // An atom at 1 has infinite jump size and never sits on a grid point.
    if (atom.position == 1.0) return Trichotomy::yes;
    jumps.push_back(-std::log1p(-atom.position));
  }
  if (jumps.empty()) return Trichotomy::no;
  constexpr std::int64_t kMaxDen = 1000000;
  constexpr double kTol = 1e-9;
  std::int64_t grid = 1;
  for (double x : jumps) {
    const double ratio = x / jumps.front();
    const auto q = detail::best_rational(ratio, kMaxDen);
    if (q.den <= 0 || std::abs(ratio - static_cast<double>(q.num) / static_cast<double>(q.den)) > kTol)
      return Trichotomy::undecided;
    grid = std::lcm(grid, q.den);
    if (grid > kMaxDen) return Trichotomy::undecided;
  }
  return Trichotomy::no;
}

/// Decides the integrability and lattice conditions for `spec`.
inline ConditionReport check_conditions(const LambdaSpec& spec) {
  if (!(spec.total_mass() > 0.0)) throw std::invalid_argument("check_conditions: total mass is zero");
  ConditionReport r;
  const bool kingman = spec.kingman_mass() > 0.0;
  r.inverse_p_integral = kingman ? kPosInf : 0.0;
  r.intensity_integral = kingman ? kPosInf : 0.0;
  for (const auto& atom : spec.atom_list()) {
    const double p = atom.position;
    r.log_one_minus_p_integral += p == 1.0 ? kPosInf : atom.mass * -std::log1p(-p);
    r.inverse_p_integral += atom.mass / p;
    r.intensity_integral += atom.mass / (p * p);
  }
  if (const auto& beta = spec.beta_component()) {
    const double a = beta->a;
    const double b = beta->b;
    // E|log(1-P)| = psi(a+b) - psi(b) for P ~ Beta(a, b).
    r.log_one_minus_p_integral +=
        beta->scale * (boost::math::digamma(a + b) - boost::math::digamma(b));
    // E[P^-1] = (a+b-1)/(a-1) when a > 1; E[P^-2] = (a+b-1)(a+b-2)/((a-1)(a-2)) when a > 2.
    r.inverse_p_integral += a > 1.0 ? beta->scale * (a + b - 1.0) / (a - 1.0) : kPosInf;
    r.intensity_integral +=
        a > 2.0 ? beta->scale * (a + b - 1.0) * (a + b - 2.0) / ((a - 1.0) * (a - 2.0)) : kPosInf;
  }
  r.has_dust = std::isfinite(r.inverse_p_integral);
  r.log_condition = std::isfinite(r.log_one_minus_p_integral);
  r.star_atom = spec.has_atom_at_one();
  if (spec.beta_component()) {
    r.log_nonlattice = Trichotomy::yes;
  } else if (spec.atom_list().empty()) {
    // Lambda((0,1]) = 0: the defining strict inequality 0 < 0 fails.
    r.log_nonlattice = Trichotomy::no;
  } else {
    r.log_nonlattice = atomic_log_nonlattice(spec.atom_list());
  }
  return r;
}

}  // namespace lcoal
