#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "grouptest/errors.hpp"
#include "grouptest/incgamma.hpp"
#include "grouptest/instance.hpp"
#include "grouptest/stein.hpp"

using namespace grouptest;

namespace {
const GroupTestInstance kRef(500, 10, 0.1, 100);
}

TEST_CASE("surrogate parameters at the reference point", "[stein]") {
  const SteinParams sp = stein_params(kRef);
  REQUIRE(sp.lam == Catch::Approx(34.86784401).epsilon(1e-10));
  REQUIRE(sp.lam_p == Catch::Approx(3.486784401).epsilon(1e-10));
  REQUIRE(sp.K == Catch::Approx(32.68069057).epsilon(1e-8));
  REQUIRE(sp.mu == Catch::Approx(14.99356322).epsilon(1e-8));
  REQUIRE(sp.sigma2 == Catch::Approx(108.781535).epsilon(1e-8));
  REQUIRE(sp.q == Catch::Approx(0.1378318776).epsilon(1e-8));
  REQUIRE(sp.r == Catch::Approx(2.396969821).epsilon(1e-8));

  REQUIRE(sp.q + sp.one_minus_q == Catch::Approx(1.0).epsilon(1e-14));
  REQUIRE(sp.sigma2 > sp.mu);
}

TEST_CASE("both dispersion formulas agree", "[stein]") {
  // r = mu^2/(sigma2 - mu) must equal the cancellation-free
  // 1/(exp(T p^2 q0) - 1) used by the implementation.
  for (const GroupTestInstance& inst :
       {kRef, GroupTestInstance(100, 4, 0.25, 30),
        GroupTestInstance(2500, 20, 0.05, 500),
        GroupTestInstance(50, 3, 0.4, 12)}) {
    const SteinParams sp = stein_params(inst);
    const double via_moments = sp.mu * sp.mu / (sp.sigma2 - sp.mu);
    REQUIRE(sp.r == Catch::Approx(via_moments).epsilon(1e-12));
  }
}

TEST_CASE("degenerate surrogate at T = 0", "[stein]") {
  REQUIRE_THROWS_AS(stein_params(GroupTestInstance(500, 10, 0.1, 0)),
                    degenerate_error);
}

TEST_CASE("surrogate negative binomial matches the surrogate moments",
          "[stein]") {
  const SteinParams sp = stein_params(kRef);
  const NegBinParams nb = stein_negbin(sp);
  REQUIRE(nb.provenance == NbProvenance::SteinMixed);
  REQUIRE(nb.r == sp.r);
  REQUIRE(nb.mean() == Catch::Approx(sp.mu).epsilon(1e-12));
}

TEST_CASE("smoothness constant of the binomial-Poisson term", "[stein]") {
  REQUIRE(alpha_q0(0.5) == Catch::Approx(1.3499017457044173).epsilon(1e-12));
  for (double q0 = 0.01; q0 < 1.0; q0 += 0.07) REQUIRE(alpha_q0(q0) > 0.0);
  REQUIRE_THROWS_AS(alpha_q0(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(alpha_q0(1.0), std::invalid_argument);
}

TEST_CASE("piecewise quadrature value at the reference point", "[stein]") {
  const SteinParams sp = stein_params(kRef);
  const double val = stein_integral(kRef, sp, 1e-8);
  REQUIRE(val == Catch::Approx(0.00146737107).epsilon(1e-6));
  // Tightening the tolerance must not move the value beyond both budgets.
  REQUIRE(std::abs(val - stein_integral(kRef, sp, 1e-9)) < 2e-8);
  REQUIRE_THROWS_AS(stein_integral(kRef, sp, 0.0), std::invalid_argument);
}

TEST_CASE("total-variation bound decomposition at the reference point",
          "[stein]") {
  const BoundReport rep = stein_bound(kRef);
  REQUIRE(rep.term_binomial_poisson ==
          Catch::Approx(0.2160216961).epsilon(1e-6));
  REQUIRE(rep.term_mixture == Catch::Approx(0.03059910861).epsilon(1e-6));
  REQUIRE(rep.term_gamma_tail == Catch::Approx(1.286238479e-26).epsilon(1e-6));
  REQUIRE(rep.term_integral == Catch::Approx(1.552969617).epsilon(1e-6));
  REQUIRE(rep.total == Catch::Approx(1.799590422).epsilon(1e-6));
  REQUIRE(rep.total == Catch::Approx(rep.term_binomial_poisson +
                                     rep.term_mixture + rep.term_gamma_tail +
                                     rep.term_integral)
                           .epsilon(1e-12));
  REQUIRE(rep.integrand_breakpoints == 204);
  REQUIRE(rep.term_binomial_poisson >= 0.0);
  REQUIRE(rep.term_mixture >= 0.0);
  REQUIRE(rep.term_gamma_tail >= 0.0);
  REQUIRE(rep.term_integral >= 0.0);
}

TEST_CASE("bound survives extreme dispersion parameters", "[stein]") {
  // Tiny r with a huge gamma argument, and a heavy (value >> 1) cell; both
  // once broke the continued fraction or the quadrature floor.
  REQUIRE(stein_bound(GroupTestInstance(2500, 5, 0.1, 1000)).total ==
          Catch::Approx(0.304275).epsilon(1e-3));
  REQUIRE(stein_bound(GroupTestInstance(2500, 20, 0.2, 500)).total ==
          Catch::Approx(358.529).epsilon(1e-3));
}

TEST_CASE("closed-form integral bound: frozen values and dominance",
          "[stein]") {
  const SteinParams sp = stein_params(kRef);
  const double integral = stein_integral(kRef, sp, 1e-8);

  struct Case {
    double eps;
    double value;
    bool lower_valid;
  };
  const Case cases[] = {{0.05, 1.03076328, false},
                        {0.1, 1.02554052, false},
                        {0.2, 1.00129763, true},
                        {0.4, 0.91005491, true},
                        {0.7, 0.71830570, true}};
  for (const Case& c : cases) {
    const ChernoffIntegralBound b = chernoff_integral_bound(kRef, sp, c.eps);
    REQUIRE(b.value == Catch::Approx(c.value).epsilon(1e-6));
    REQUIRE(b.lower_tail_valid == c.lower_valid);
    REQUIRE(b.upper_tail_valid);
    REQUIRE(b.applicable == c.lower_valid);
    REQUIRE(b.value >= integral);  // closed form can only be looser
  }
  REQUIRE_THROWS_AS(chernoff_integral_bound(kRef, sp, 0.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(chernoff_integral_bound(kRef, sp, 1.0),
                    std::invalid_argument);
}

TEST_CASE("gamma tail bound: boundary, closed form, and validity flags",
          "[stein]") {
  // At the mean z = alpha/beta both directions give exactly 1.
  for (double alpha : {0.5, 1.0, 4.0}) {
    const double beta = 2.0;
    const ChernoffTail up =
        chernoff_gamma_tail(alpha, beta, alpha / beta, TailSide::Upper);
    const ChernoffTail lo =
        chernoff_gamma_tail(alpha, beta, alpha / beta, TailSide::Lower);
    REQUIRE(up.value == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(lo.value == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(up.valid);
    REQUIRE(lo.valid);
  }

  // alpha = 1 at z = 2/beta: exp(1 + log 2 - 2) = 2/e.
  const ChernoffTail one = chernoff_gamma_tail(1.0, 3.0, 2.0 / 3.0,
                                               TailSide::Upper);
  REQUIRE(one.value == Catch::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
  REQUIRE(one.valid);

  REQUIRE_FALSE(chernoff_gamma_tail(4.0, 2.0, 1.0, TailSide::Upper).valid);
  REQUIRE_FALSE(chernoff_gamma_tail(4.0, 2.0, 3.0, TailSide::Lower).valid);
  REQUIRE_THROWS_AS(chernoff_gamma_tail(0.0, 2.0, 1.0, TailSide::Upper),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(chernoff_gamma_tail(1.0, 2.0, -1.0, TailSide::Upper),
                    std::invalid_argument);
}

TEST_CASE("gamma tail bound dominates the exact gamma tail", "[stein]") {
  for (double alpha : {0.5, 2.0, 7.0}) {
    for (double beta : {0.5, 3.0}) {
      const double mean = alpha / beta;
      const double zu = 1.7 * mean;
      const ChernoffTail up = chernoff_gamma_tail(alpha, beta, zu,
                                                  TailSide::Upper);
      REQUIRE(up.valid);
      REQUIRE(regularized_upper_gamma(alpha, beta * zu) <=
              up.value + 1e-15);

      const double zl = 0.5 * mean;
      const ChernoffTail lo = chernoff_gamma_tail(alpha, beta, zl,
                                                  TailSide::Lower);
      REQUIRE(lo.valid);
      REQUIRE(1.0 - regularized_upper_gamma(alpha, beta * zl) <=
              lo.value + 1e-15);
    }
  }
}
