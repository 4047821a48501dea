#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>

#include "grouptest/errors.hpp"
#include "grouptest/exact_dist.hpp"
#include "grouptest/instance.hpp"
#include "grouptest/negbin.hpp"

namespace grouptest {

// First-stage size minimizing E(T1 + k + G).  `reference` is the classical
// k e log((n-k)/(k e)) rule of thumb (tuned to p = 1/k); `exact` solves
// d/dT1 [T1 + (n-k)(1-q0 p)^{T1}] = 0 in closed form for any p.  When either
// log argument is at most 1 the optimum is T1 = 0 (individual testing) and
// the degenerate flag is set.
struct OptimalT1 {
  double reference;
  double exact;
  bool degenerate;
};

inline OptimalT1 optimal_T1(const GroupTestInstance& inst) {
  const double kd = static_cast<double>(inst.k);
  const double Ld = static_cast<double>(inst.L());
  const double ke = kd * std::numbers::e;
  const double ref_arg = Ld / ke;
  const double rate = -std::log1p(-inst.q0() * inst.p);
  const double exact_arg = Ld * rate;
  OptimalT1 out;
  out.reference = ref_arg > 1.0 ? ke * std::log(ref_arg) : 0.0;
  out.exact = exact_arg > 1.0 ? std::log(exact_arg) / rate : 0.0;
  out.degenerate = !(ref_arg > 1.0) || !(exact_arg > 1.0);
  return out;
}

// E(T1 + k + G) = T1 + k + (n-k)(1 - q0 p)^{T1}.
inline double expected_total_tests(const GroupTestInstance& inst, double T1) {
  if (!(T1 >= 0.0))
    throw std::invalid_argument("expected_total_tests: T1 >= 0");
  return T1 + static_cast<double>(inst.k) +
         static_cast<double>(inst.L()) *
             std::exp(T1 * std::log1p(-inst.q0() * inst.p));
}

struct ErrorBound {
  double value;
  bool vacuous;
};

// P(G > T2 - k) <= Var(G) / (T2 - k - E G)^2, one-sided Chebyshev applied
// above the mean; below or at the mean it carries no information and is
// reported as 1 with the vacuous flag.
inline ErrorBound chebyshev_error_bound(const GroupTestInstance& inst,
                                        std::int64_t T1, std::int64_t T2) {
  const GroupTestInstance stage1 = inst.with_T(T1);
  const double m1 = falling_moment_G(stage1, 1);
  const double m2 = falling_moment_G(stage1, 2);
  const double var = m2 + m1 - m1 * m1;
  const double slack = static_cast<double>(T2 - inst.k) - m1;
  if (!(slack > 0.0)) return {1.0, true};
  const double value = var / (slack * slack);
  return {value < 1.0 ? value : 1.0, false};
}

struct TwoStagePlan {
  std::int64_t T1;
  std::int64_t T2;
  double expected_stage2;
  std::map<std::string, ErrorBound> error_bounds;
  bool individual_feasible;
  bool degenerate;
};

// Splits a total budget inst.T into T1 pooled tests plus T2 = T - T1
// individual tests.  The real-valued minimizer is clamped to the budget and
// both integer neighbours are compared on expected total tests (ties go to
// the smaller T1).  Attached bounds address the failure event G > T2 - k.
inline TwoStagePlan plan_two_stage(const GroupTestInstance& inst) {
  if (inst.T < inst.k)
    throw std::invalid_argument(
        "plan_two_stage: budget below k cannot finish stage 2");
  const OptimalT1 opt = optimal_T1(inst);
  std::int64_t T1 = 0;
  if (!opt.degenerate) {
    const double budget = static_cast<double>(inst.T);
    const double clamped =
        opt.exact < 0.0 ? 0.0 : (opt.exact > budget ? budget : opt.exact);
    const std::int64_t lo = static_cast<std::int64_t>(std::floor(clamped));
    std::int64_t hi = static_cast<std::int64_t>(std::ceil(clamped));
    if (hi > inst.T) hi = inst.T;
    T1 = expected_total_tests(inst, static_cast<double>(lo)) <=
                 expected_total_tests(inst, static_cast<double>(hi))
             ? lo
             : hi;
  }
  const std::int64_t T2 = inst.T - T1;

  TwoStagePlan plan;
  plan.T1 = T1;
  plan.T2 = T2;
  plan.expected_stage2 = static_cast<double>(inst.k) +
                         falling_moment_G(inst.with_T(T1), 1);
  plan.error_bounds["chebyshev"] = chebyshev_error_bound(inst, T1, T2);
  try {
    const NegBinParams nb = fit_moment_matched(inst.with_T(T1));
    const NbTailBound tail =
        nb_tail_bound(nb, static_cast<double>(T2 - inst.k));
    plan.error_bounds["nb_tail"] = {tail.value, tail.vacuous};
  } catch (const degenerate_error&) {
    plan.error_bounds["nb_tail"] = {1.0, true};
  }
  plan.individual_feasible = inst.T >= inst.n;
  plan.degenerate = opt.degenerate;
  return plan;
}

}  // namespace grouptest
