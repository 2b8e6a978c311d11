#include <cmath>

#include "catch_amalgamated.hpp"
#include "lcoal/reversal.hpp"

using namespace lcoal;
using Catch::Approx;

namespace {

ReversedChainSpec kingman_reversed(int J = 20) {
  const auto est = invariant_from_profiles(LambdaSpec::kingman(), {2 * 4 * J, 4 * 4 * J}, J);
  return build_reversed(LambdaSpec::kingman(), est);
}

}  // namespace

TEST_CASE("Kingman reversal is the deterministic ladder") {
  const auto r = kingman_reversed();
  for (int i = 2; i < r.J; ++i) {
    REQUIRE(r.rate(i, i + 1) == Approx(i * (i - 1) / 2.0).epsilon(1e-13));
    for (int j = i + 2; j <= r.J; ++j) REQUIRE(r.rate(i, j) == 0.0);
    REQUIRE(r.escape(i) == 0.0);
  }
  CHECK(r.escape(r.J) == Approx(r.J * (r.J - 1) / 2.0).epsilon(1e-13));
  CHECK(r.initial(2) == 1.0);
  CHECK(r.initial_tail == 0.0);

  Stream rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto path = simulate_reversed(r, 1e9, rng);
    REQUIRE(path.truncated);
    REQUIRE(static_cast<int>(path.states.size()) == r.J - 1);
    for (std::size_t m = 0; m < path.states.size(); ++m) REQUIRE(path.states[m] == static_cast<int>(m) + 2);
  }
  const auto zero = simulate_reversed(r, 0.0, rng);
  CHECK(zero.states == std::vector<int>{2});
  CHECK(zero.holding_times.empty());
  CHECK_FALSE(zero.truncated);
}

TEST_CASE("reversed exit rates equal forward rates") {
  for (const auto& spec : {LambdaSpec::beta(1.0, 1.0), LambdaSpec::beta_alpha(1.5), LambdaSpec::beta_alpha(0.5)}) {
    InvariantOptions opt;
    opt.tolerance = 1e-1;
    const auto est = invariant_from_profiles(spec, {400, 800}, 100, opt);
    REQUIRE(est.verdict == Verdict::converged);
    const auto r = build_reversed(spec, est);
    for (int i = 2; i <= r.J / 2; ++i)
      REQUIRE(r.exit(i) == Approx(r.rho_total[static_cast<std::size_t>(i - 2)]).epsilon(1e-6));
    double mass = r.initial_tail;
    for (double p : r.initial_law) mass += p;
    CHECK(mass == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("multi-step upward jumps occur for atomic measures") {
  const auto spec = LambdaSpec::atoms({{0.3, 0.5}, {0.6, 0.25}});
  InvariantOptions opt;
  opt.tolerance = 1.0;
  const auto est = invariant_from_profiles(spec, {400, 800}, 100, opt);
  const auto r = build_reversed(spec, est);
  CHECK(r.rate(2, 4) > 0.0);
  Stream rng(8);
  int multi = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    const auto path = simulate_reversed(r, 5.0, rng);
    for (std::size_t m = 1; m < path.states.size(); ++m) multi += path.states[m] - path.states[m - 1] > 1;
  }
  CHECK(multi > 0);
}

TEST_CASE("build_reversed rejects non-converged estimates") {
  const auto est = invariant_from_profiles(LambdaSpec::star(), {100, 200}, 20);
  CHECK_THROWS_AS(build_reversed(LambdaSpec::star(), est), std::invalid_argument);
}

TEST_CASE("empirical reversal test") {
  SECTION("Kingman, r = 2") {
    const auto r = kingman_reversed();
    const auto res = empirical_reversal_test(LambdaSpec::kingman(), 200, 20000, 2, 4, r);
    CHECK(res.short_paths == 0);
    CHECK(res.chi.p_value == 1.0);
    CHECK(res.ks.size() == 3);
    CHECK(res.passes(1e-3));
  }
  SECTION("r = 0 compares the last-merger law") {
    InvariantOptions opt;
    opt.tolerance = 1e-1;
    const auto spec = LambdaSpec::beta(1.0, 1.0);
    const auto est = invariant_from_profiles(spec, {200, 400}, 50, opt);
    const auto r = build_reversed(spec, est);
    const auto res = empirical_reversal_test(spec, 400, 20000, 0, 12, r);
    const auto mc = last_merger_mc(spec, 400, 20000, 12);
    std::vector<std::int64_t> head(mc.counts.begin(), mc.counts.begin() + 49);
    std::int64_t rest = 0;
    for (std::size_t i = 49; i < mc.counts.size(); ++i) rest += mc.counts[i];
    // same seed, same forward paths: identical statistic
    const auto direct = chi_square_gof(head, r.initial_law, rest);
    CHECK(res.chi.statistic == Approx(direct.statistic).epsilon(1e-12));
    CHECK(res.passes(1e-3));
  }
  CHECK_THROWS_AS(empirical_reversal_test(LambdaSpec::kingman(), 50, 10, 6, 1, kingman_reversed()),
                  std::invalid_argument);
}
