#include <cmath>

#include "catch_amalgamated.hpp"
#include "lcoal/rates.hpp"
#include "oracles.hpp"

using namespace lcoal;
using Catch::Approx;

TEST_CASE("closed-form rates match the linear-space oracle") {
  for (const auto& spec : oracle::battery()) {
    const RateModel model(spec, 40);
    for (int b = 2; b <= 40; ++b) {
      for (int k = 2; k <= b; ++k) {
        const double want = oracle::lambda(spec, b, k);
        const double got = std::exp(model.log_lambda(b, k));
        if (want == 0.0) {
          REQUIRE(got == 0.0);
        } else {
          REQUIRE(got == Approx(want).epsilon(1e-11));
        }
      }
      std::vector<double> row(static_cast<std::size_t>(b));
      REQUIRE(std::exp(model.log_rho_row(b, row)) == Approx(oracle::rho_total(spec, b)).epsilon(1e-11));
    }
  }
}

TEST_CASE("Beta(1,1) hand values") {
  const auto spec = LambdaSpec::beta(1.0, 1.0);
  CHECK(lambda_bk(spec, 4, 3) == Approx(1.0 / 6.0).epsilon(1e-14));
  const auto r = rate_row(spec, 4);
  CHECK(r.rho(3) == Approx(2.0).epsilon(1e-14));
  CHECK(r.rho(2) == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(r.rho(1) == Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(r.rho_total() == Approx(3.0).epsilon(1e-14));
  CHECK(r.transition(3) == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(std::isinf(r.log_event_rate));
}

TEST_CASE("Kingman and star rows") {
  const auto k = rate_row(LambdaSpec::kingman(), 10);
  CHECK(k.rho(9) == Approx(45.0));
  for (int j = 1; j < 9; ++j) CHECK(k.rho(j) == 0.0);
  const auto s = rate_row(LambdaSpec::star(), 10);
  CHECK(s.rho(1) == Approx(1.0));
  for (int j = 2; j < 10; ++j) CHECK(s.rho(j) == 0.0);
}

TEST_CASE("consistency recursion holds for b up to 1000") {
  for (const auto& spec : oracle::battery()) {
    const RateModel model(spec, 1001);
    double worst = 0.0;
    for (int b = 2; b <= 1000; b += (b < 50 ? 1 : 37)) worst = std::max(worst, consistency_residual(model, b));
    INFO(spec.to_json().dump());
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("large states keep finite rates") {
  const auto ew = LambdaSpec::eldon_wakeley(std::exp(-1.0));
  const auto r = rate_row(ew, 5000);
  CHECK(std::isfinite(r.log_rho_total));
  CHECK(r.rho_total() == Approx(1.0).epsilon(1e-10));
  CHECK(std::isfinite(r.log_lambda[0]));
  CHECK(r.log_lambda[0] < -745.0);
}

TEST_CASE("event rate equals b f(log b) and the quadrature oracle") {
  const std::vector<LambdaSpec> dust = {LambdaSpec::beta(1.5, 0.5), LambdaSpec::beta(3.0, 1.0),
                                        LambdaSpec::eldon_wakeley(std::exp(-1.0)),
                                        LambdaSpec::atoms({{0.3, 0.5}, {0.6, 0.25}}),
                                        LambdaSpec(0.0, {{0.9, 0.3}}, BetaComponent{5.0, 2.0, 0.5})};
  for (const auto& spec : dust) {
    for (int b : {2, 3, 10, 100, 1000}) {
      const double closed = event_rate(spec, b);
      CHECK(closed == Approx(b * drift_f(spec, std::log(static_cast<double>(b)))).epsilon(1e-8));
      CHECK(closed == Approx(oracle::event_rate(spec, b)).epsilon(1e-8));
    }
  }
}

TEST_CASE("drift f") {
  CHECK(drift_f(LambdaSpec::atoms({{0.5, 0.25}}), 0.0) == Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(drift_f(LambdaSpec::kingman(), 0.0), std::domain_error);
  CHECK_THROWS_AS(drift_f(LambdaSpec::beta(1.0, 1.0), 0.0), std::domain_error);
  const auto spec = LambdaSpec::beta(2.5, 1.0);
  double prev = drift_f(spec, 0.0);
  for (double y = 0.5; y < 10.0; y += 0.5) {
    const double f = drift_f(spec, y);
    CHECK(f > 0.0);
    CHECK(f <= prev * (1.0 + 1e-12));  // f is nonincreasing
    prev = f;
  }
  // e^y f(y) -> int p^-2 Lambda(dp) as y grows
  CHECK(prev * std::exp(9.5) == Approx(check_conditions(spec).intensity_integral).epsilon(2e-2));
}

TEST_CASE("descending recursion reproduces the closed form") {
  for (const auto& spec : {LambdaSpec::beta(1.0, 1.0), LambdaSpec::beta_alpha(0.5),
                           LambdaSpec::eldon_wakeley(0.3), LambdaSpec(1.0, {{0.4, 1.0}}, std::nullopt)}) {
    const RateModel model(spec, 200);
    auto rows = DescendingRows::from_model(model, 200);
    do {
      const int b = rows.b();
      for (int k = 2; k <= b; ++k)
      {
        const double got = rows.log_lambda()[static_cast<std::size_t>(k - 2)];
        const double want = model.log_lambda(b, k);
        if (std::isinf(want))
          REQUIRE(got == want);
        else
          REQUIRE(std::exp(got - want) == Approx(1.0).epsilon(1e-11));
      }
    } while (rows.step());
    CHECK(rows.b() == 2);
  }
}

TEST_CASE("quadrature seed row matches the closed form") {
  const auto spec = LambdaSpec::beta(2.5, 1.5);
  const RateModel model(spec, 60);
  const auto rows = DescendingRows::from_quadrature(spec, 60);
  for (int k = 2; k <= 60; ++k)
    CHECK(std::exp(rows.log_lambda()[static_cast<std::size_t>(k - 2)] - model.log_lambda(60, k)) ==
          Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rate argument checks") {
  const RateModel model(LambdaSpec::kingman(), 10);
  CHECK_THROWS_AS(model.log_lambda(11, 2), std::out_of_range);
  CHECK_THROWS_AS(model.log_lambda(5, 6), std::invalid_argument);
  CHECK_THROWS_AS(model.log_lambda(1, 2), std::out_of_range);
  CHECK_THROWS_AS(rate_row(LambdaSpec::kingman(), 1), std::invalid_argument);
}
