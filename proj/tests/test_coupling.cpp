#include <cmath>

#include "catch_amalgamated.hpp"
#include "lcoal/coupling.hpp"

using namespace lcoal;
using Catch::Approx;

namespace {
const double kP = std::exp(-1.0);
}

TEST_CASE("Eldon-Wakeley traces") {
  const CouplingModel model(LambdaSpec::eldon_wakeley(kP));
  CHECK(model.intensity() == Approx(1.0).epsilon(1e-15));
  const double jump = -std::log1p(-kP);
  Stream rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const auto tr = simulate_coupled(model, 1000, 10, rng);
    REQUIRE(tr.initial_discrepancy == 0.0);
    REQUIRE(tr.max_residual <= 1e-6);
    REQUIRE(tr.y_monotone);
    const std::size_t events = tr.event_times.size();
    REQUIRE(events > 0);
    REQUIRE(tr.jump_sizes.size() == events);
    REQUIRE(tr.S.size() == events);
    REQUIRE(tr.N.size() == events);
    int prev_N = 1000;
    for (std::size_t m = 0; m < events; ++m) {
      REQUIRE(tr.jump_sizes[m] == jump);
      REQUIRE(tr.S[m] == Approx(jump * static_cast<double>(m + 1)).epsilon(1e-14));
      REQUIRE(tr.N[m] <= prev_N);
      REQUIRE(tr.Y_right[m] == Approx(tr.Y_left[m] - jump).margin(1e-14));
      if (m > 0) {
        REQUIRE(tr.event_times[m] > tr.event_times[m - 1]);
        REQUIRE(tr.Y_left[m] >= tr.Y_right[m - 1]);
      }
      prev_N = tr.N[m];
    }
    // stops at the first event taking N below k, and not before
    for (std::size_t m = 0; m + 1 < events; ++m) REQUIRE(tr.N[m] >= 10);
    REQUIRE(tr.N.back() < 10);
  }
}

TEST_CASE("n = 2 with k = 2 ends at the first effective merger") {
  Stream rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const auto tr = simulate_coupled(LambdaSpec::eldon_wakeley(kP), 2, 2, rng);
    REQUIRE(tr.initial_discrepancy == 0.0);
    REQUIRE(tr.stop == CouplingStop::absorbed);
    REQUIRE(tr.N.back() == 1);
    for (std::size_t m = 0; m + 1 < tr.N.size(); ++m) REQUIRE(tr.N[m] == 2);
  }
}

TEST_CASE("coupling preconditions") {
  Stream rng(1);
  CHECK_THROWS_AS(simulate_coupled(LambdaSpec::kingman(), 10, 2, rng), std::domain_error);
  CHECK_THROWS_AS(simulate_coupled(LambdaSpec::beta(1.0, 1.0), 10, 2, rng), std::domain_error);
  CHECK_THROWS_AS(simulate_coupled(LambdaSpec::beta(1.5, 0.5), 10, 2, rng), std::domain_error);
  CHECK_THROWS_AS(simulate_coupled(LambdaSpec::eldon_wakeley(kP), 10, 11, rng), std::invalid_argument);
  CHECK_THROWS_AS(discrepancy_quantiles(LambdaSpec::kingman(), {100}, {10}, 10, 1), std::domain_error);
}

TEST_CASE("marks from a Beta component follow p^-2 Lambda(dp)") {
  // p^-2 Beta(3, 1) is proportional to Beta(1, 1)
  const CouplingModel model(LambdaSpec::beta(3.0, 1.0));
  CHECK(model.intensity() == Approx(3.0));
  Stream rng(99);
  std::vector<double> u(20000);
  for (auto& x : u) x = model.sample_mark(rng);
  CHECK(ks_uniform(u).p_value > 1e-3);
}

TEST_CASE("traces with a Beta component") {
  const CouplingModel model(LambdaSpec(0.0, {{0.5, 0.2}}, BetaComponent{3.0, 2.0, 1.0}));
  Stream rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    const auto tr = simulate_coupled(model, 500, 20, rng);
    REQUIRE(tr.max_residual <= 1e-6);
    REQUIRE(tr.y_monotone);
    for (std::size_t m = 1; m < tr.S.size(); ++m) REQUIRE(tr.S[m] >= tr.S[m - 1]);
  }
}

TEST_CASE("quantile table") {
  const auto spec = LambdaSpec::eldon_wakeley(kP);
  const auto a = discrepancy_quantiles(spec, {300}, {5, 30, 300}, 300, 17, 1);
  const auto b = discrepancy_quantiles(spec, {300}, {5, 30, 300}, 300, 17, 4);
  REQUIRE(a.rows.size() == 3);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].quantile == b.rows[i].quantile);
    CHECK(a.rows[i].ci_lo <= a.rows[i].quantile);
    CHECK(a.rows[i].quantile <= a.rows[i].ci_hi);
    CHECK(a.rows[i].max_residual <= 1e-6);
    CHECK(a.rows[i].all_monotone);
  }
  CHECK(a.nonincreasing_in_k(false, true));
  CHECK_THROWS_AS(discrepancy_quantiles(spec, {100}, {200}, 10, 1), std::invalid_argument);
}
