#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "catch_amalgamated.hpp"
#include "lcoal/chain.hpp"
#include "lcoal/invariant.hpp"
#include "lcoal/reference.hpp"

using namespace lcoal;
using Catch::Approx;

TEST_CASE("Kingman invariant measure") {
  const auto mu = kingman_invariant(10);
  CHECK(mu[0] == 1.0);
  CHECK(mu[1] == Approx(1.0 / 3.0).epsilon(1e-15));
  const auto law = kingman_limit_law(10);
  CHECK(law.prob(2) == 1.0);
  CHECK(law.tail_bound == 0.0);
}

TEST_CASE("Bolthausen-Sznitman P(L = 2) by two quadrature schemes") {
  const auto law = beta_limit_law(1.0, 5);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double direct = -ts.integrate([](double x) { return x / std::log1p(-x); }, 0.0, 1.0);
  CHECK(law.prob(2) == Approx(direct).epsilon(1e-12));
  CHECK(law.prob(2) == Approx(std::numbers::ln2).epsilon(1e-12));  // int_0^1 (1-u)/(-log u) du = log 2
}

TEST_CASE("closed values for alpha = 0.5 and 1.5") {
  // alpha = 0.5: 0.25 * int x / (1 - sqrt(1-x)) dx = 0.25 * 5/3
  CHECK(beta_limit_law(0.5, 3).prob(2) == Approx(5.0 / 12.0).epsilon(1e-12));
  // alpha = 1.5: -0.75 * int x / (1 - (1-x)^{-1/2}) dx = 0.75 * 7/6
  CHECK(beta_limit_law(1.5, 3).prob(2) == Approx(7.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("limit law mass and tails") {
  for (double alpha : {0.1, 0.5, 1.0, 1.5, 1.9}) {
    const auto law = beta_limit_law(alpha, 200);
    INFO("alpha " << alpha);
    for (double p : law.probs) {
      REQUIRE(p >= 0.0);
      REQUIRE(p <= 1.0);
    }
    CHECK(law.tail_bound >= -1e-12);
    CHECK(beta_limit_law(alpha, 400).tail_bound < law.tail_bound);
  }
  CHECK(beta_limit_law(1.0, 200).tail_bound < 1e-2);
  CHECK(beta_limit_law(1.5, 200).tail_bound < 1e-2);
  CHECK_THROWS_AS(beta_limit_law(0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(beta_limit_law(2.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(beta_limit_law(1.0, 1), std::invalid_argument);
}

TEST_CASE("mu from the limit law") {
  const auto mu = beta_mu_from_limit(1.0, 50);
  CHECK(mu[0] == Approx(beta_limit_law(1.0, 2).prob(2)).epsilon(1e-14));  // lambda_22 = 1
  for (double m : mu) REQUIRE(m > 0.0);
  CHECK(std::exp(beta_log_lambda_ii(0.5, 5)) == Approx(std::beta(4.5, 0.5) / std::beta(1.5, 0.5)).epsilon(1e-13));
}

TEST_CASE("limit law solves the balance equations") {
  for (double alpha : {1.0, 1.5}) {
    const auto mu = beta_mu_from_limit(alpha, 800);
    const auto r = residual_check(LambdaSpec::beta_alpha(alpha), mu, 80);
    INFO("alpha " << alpha);
    CHECK(r.max_residual <= 1e-2);
  }
}

TEST_CASE("exact DP approaches the limit law") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const auto law = beta_limit_law(alpha, 30);
    const auto a = absorption_profile(LambdaSpec::beta_alpha(alpha), 200);
    const auto b = absorption_profile(LambdaSpec::beta_alpha(alpha), 800);
    for (int i = 2; i <= 10; ++i)
      CHECK(std::abs(b.last_merger(i) - law.prob(i)) <= std::abs(a.last_merger(i) - law.prob(i)) + 1e-15);
  }
}
