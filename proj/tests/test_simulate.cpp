#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "grouptest/exact_dist.hpp"
#include "grouptest/instance.hpp"
#include "grouptest/rng.hpp"
#include "grouptest/simulate.hpp"

using namespace grouptest;

TEST_CASE("binomial sampler edge cases", "[simulate]") {
  Rng rng(1);
  REQUIRE(sample_binomial(rng, 10, 0.0) == 0);
  REQUIRE(sample_binomial(rng, 10, 1.0) == 10);
  REQUIRE(sample_binomial(rng, 0, 0.5) == 0);
  for (int i = 0; i < 100; ++i) {
    const std::int64_t x = sample_binomial(rng, 7, 0.4);
    REQUIRE(x >= 0);
    REQUIRE(x <= 7);
  }
}

TEST_CASE("binomial sampler matches exact frequencies", "[simulate]") {
  Rng rng(2718);
  const std::int64_t draws = 100000;
  std::vector<std::int64_t> counts(4, 0);
  for (std::int64_t i = 0; i < draws; ++i)
    ++counts[static_cast<std::size_t>(sample_binomial(rng, 3, 0.4))];
  const double expect[4] = {0.216, 0.432, 0.288, 0.064};
  for (std::size_t x = 0; x < 4; ++x) {
    const double freq =
        static_cast<double>(counts[x]) / static_cast<double>(draws);
    const double se =
        std::sqrt(expect[x] * (1.0 - expect[x]) / static_cast<double>(draws));
    REQUIRE(std::abs(freq - expect[x]) < 4.0 * se);
  }
}

TEST_CASE("binomial sampler mean at a larger size", "[simulate]") {
  Rng rng(99);
  const std::int64_t draws = 200000;
  double sum = 0.0;
  for (std::int64_t i = 0; i < draws; ++i)
    sum += static_cast<double>(sample_binomial(rng, 100, 0.37));
  const double mean = sum / static_cast<double>(draws);
  const double se = std::sqrt(100.0 * 0.37 * 0.63 / static_cast<double>(draws));
  REQUIRE(std::abs(mean - 37.0) < 4.0 * se);
}

TEST_CASE("T = 0 sends every trial to the maximum count", "[simulate]") {
  const GroupTestInstance inst(20, 5, 0.3, 0);
  for (Engine engine : {Engine::MixtureLevel, Engine::MatrixLevel}) {
    const SimulationConfig cfg{inst, 500, 7, engine};
    const EmpiricalDist dist = simulate_G(cfg, 1);
    REQUIRE(dist.trials == 500);
    REQUIRE(dist.counts[15] == 500);
  }
}

TEST_CASE("simulation is reproducible and scheduling-independent",
          "[simulate]") {
  const GroupTestInstance inst(500, 10, 0.1, 100);
  const SimulationConfig cfg{inst, 13000, 42, Engine::MixtureLevel};
  const EmpiricalDist a = simulate_G(cfg, 1);
  const EmpiricalDist b = simulate_G(cfg, 1);
  const EmpiricalDist c = simulate_G(cfg, 3);
  REQUIRE(a.counts == b.counts);
  REQUIRE(a.counts == c.counts);

  const SimulationConfig mcfg{GroupTestInstance(30, 4, 0.3, 12), 13000, 42,
                              Engine::MatrixLevel};
  const EmpiricalDist ma = simulate_G(mcfg, 1);
  const EmpiricalDist mc = simulate_G(mcfg, 3);
  REQUIRE(ma.counts == mc.counts);

  REQUIRE_THROWS_AS(simulate_G({inst, 0, 1, Engine::MixtureLevel}),
                    std::invalid_argument);
}

TEST_CASE("mixture engine tracks the exact distribution", "[simulate]") {
  const GroupTestInstance inst(50, 5, 0.2, 25);
  const SimulationConfig cfg{inst, 200000, 515, Engine::MixtureLevel};
  const EmpiricalDist dist = simulate_G(cfg, 1);
  const double tv = tv_distance(to_pmf(dist), exact_pmf_G(inst));
  REQUIRE(tv < 0.01);
}

TEST_CASE("matrix engine tracks the exact distribution", "[simulate]") {
  const GroupTestInstance inst(30, 4, 0.3, 12);
  const SimulationConfig cfg{inst, 50000, 616, Engine::MatrixLevel};
  const EmpiricalDist dist = simulate_G(cfg, 1);
  const double tv = tv_distance(to_pmf(dist), exact_pmf_G(inst));
  REQUIRE(tv < 0.02);
}

TEST_CASE("engines agree under a two-sample chi-squared test", "[simulate]") {
  const GroupTestInstance inst(30, 4, 0.3, 12);
  const EmpiricalDist a =
      simulate_G({inst, 50000, 11, Engine::MatrixLevel}, 1);
  const EmpiricalDist b =
      simulate_G({inst, 50000, 22, Engine::MixtureLevel}, 1);
  const ChiSquareResult res = chi_square_two_sample(a.counts, b.counts);
  REQUIRE(res.df >= 1);
  REQUIRE(res.p_value >= 1e-4);
}

TEST_CASE("empirical mean at the reference point", "[simulate]") {
  const GroupTestInstance inst(500, 10, 0.1, 100);
  const SimulationConfig cfg{inst, 100000, 12345, Engine::MixtureLevel};
  const EmpiricalDist dist = simulate_G(cfg, 1);
  const double mean = empirical_falling_moment(dist, 1);
  const double var = 252.707083174 + 14.088820497325559 -
                     14.088820497325559 * 14.088820497325559;
  const double se = std::sqrt(var / 100000.0);
  REQUIRE(std::abs(mean - 14.088820497325559) < 4.0 * se);
}

TEST_CASE("empirical falling moments on a crafted histogram", "[simulate]") {
  EmpiricalDist dist;
  dist.counts = {1, 2, 1};
  dist.trials = 4;
  REQUIRE(empirical_falling_moment(dist, 0) == 1.0);
  REQUIRE(empirical_falling_moment(dist, 1) == Catch::Approx(1.0));
  REQUIRE(empirical_falling_moment(dist, 2) == Catch::Approx(0.5));
  REQUIRE(empirical_falling_moment(dist, 4) == 0.0);
  REQUIRE_THROWS_AS(empirical_falling_moment(dist, -1), std::invalid_argument);
  EmpiricalDist empty;
  REQUIRE_THROWS_AS(empirical_falling_moment(empty, 1), std::invalid_argument);
}

TEST_CASE("total variation distance", "[simulate]") {
  REQUIRE(tv_distance({0.5, 0.5}, {0.5, 0.5}) == 0.0);
  REQUIRE(tv_distance({1.0}, {0.0, 1.0}) == Catch::Approx(1.0));
  REQUIRE(tv_distance({0.25, 0.75}, {0.75, 0.25}) == Catch::Approx(0.5));
  REQUIRE_THROWS_AS(tv_distance({0.5, 0.4}, {0.5, 0.5}),
                    std::invalid_argument);
}

TEST_CASE("two-stage failure rate matches the exact tail", "[simulate]") {
  const GroupTestInstance inst(100, 5, 0.15, 0);
  const std::int64_t T1 = 40;
  const std::int64_t T2 = 12;
  const TwoStageErrorEstimate est =
      simulate_two_stage_error(inst, T1, T2, 50000, 77, Engine::MixtureLevel);

  const std::vector<double> pmf = exact_pmf_G(inst.with_T(T1));
  double exact = 0.0;
  for (std::size_t g = static_cast<std::size_t>(T2 - 5 + 1); g < pmf.size();
       ++g)
    exact += pmf[g];
  const double se = std::sqrt(exact * (1.0 - exact) / 50000.0);
  REQUIRE(std::abs(est.rate - exact) < 4.0 * se);
  REQUIRE(est.failures ==
          static_cast<std::int64_t>(std::llround(est.rate * 50000.0)));

  // A stage-2 budget covering every item can never fail.
  const TwoStageErrorEstimate zero =
      simulate_two_stage_error(inst, T1, 100, 2000, 77);
  REQUIRE(zero.failures == 0);
  REQUIRE(zero.rate == 0.0);
  REQUIRE_THROWS_AS(simulate_two_stage_error(inst, T1, -1, 100, 77),
                    std::invalid_argument);
}

TEST_CASE("chi-squared helper behavior", "[simulate]") {
  // Identical histograms: statistic 0, p-value 1.
  const std::vector<std::int64_t> h = {40, 60, 30, 12};
  const ChiSquareResult same = chi_square_two_sample(h, h);
  REQUIRE(same.statistic == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(same.p_value == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(same.df == same.bins - 1);

  // Sparse bins are pooled until each pooled bin holds 10 counts.
  const std::vector<std::int64_t> sparse_a = {1, 1, 1, 1, 1, 20};
  const std::vector<std::int64_t> sparse_b = {2, 0, 1, 2, 1, 19};
  const ChiSquareResult pooled = chi_square_two_sample(sparse_a, sparse_b);
  REQUIRE(pooled.bins == 2);

  REQUIRE_THROWS_AS(chi_square_two_sample({3, 4}, {0, 0}),
                    std::invalid_argument);

  // Same distribution, different seeds: comfortably non-significant.
  const GroupTestInstance inst(50, 5, 0.2, 25);
  const EmpiricalDist a = simulate_G({inst, 30000, 1, Engine::MixtureLevel}, 1);
  const EmpiricalDist b = simulate_G({inst, 30000, 2, Engine::MixtureLevel}, 1);
  REQUIRE(chi_square_two_sample(a.counts, b.counts).p_value >= 1e-4);
}

TEST_CASE("histogram csv format", "[simulate]") {
  EmpiricalDist dist;
  dist.counts = {1, 3};
  dist.trials = 4;
  std::ostringstream out;
  write_histogram_csv(dist, out);
  REQUIRE(out.str() == "g,count,empirical_prob\n0,1,0.25\n1,3,0.75\n");
}
