#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "grouptest/errors.hpp"
#include "grouptest/instance.hpp"
#include "grouptest/mathutil.hpp"

namespace grouptest {

// Exact pmf of G together with its falling moments up to a requested order.
struct DistributionSummary {
  std::vector<double> pmf;              // index g = 0..n-k
  std::vector<double> falling_moments;  // index s = 0..s_max
};

// Exact pmf of the intruder count G via the binomial-mixture representation:
// the number of negative tests is M0 ~ Bin(T, q0) and, given M0 = m, each
// non-defective item is intruding independently with probability (1-p)^m.
// Work is (T+1)(n-k) terms; guarded at 1e8.
inline std::vector<double> exact_pmf_G(const GroupTestInstance& inst) {
  const std::int64_t L = inst.L();
  const double work = (static_cast<double>(inst.T) + 1.0) * static_cast<double>(L);
  if (work > 1e8)
    throw resource_error("exact_pmf_G: (T+1)(n-k) = " + std::to_string(work) +
                         " exceeds the 1e8-term guard");

  const double l1mp = inst.log_one_minus_p();
  const double lq0 = static_cast<double>(inst.k) * l1mp;   // log q0
  const double l1mq0 = log1mexp(lq0);                      // log(1-q0)

  std::vector<double> lcL(static_cast<std::size_t>(L) + 1);
  for (std::int64_t g = 0; g <= L; ++g)
    lcL[static_cast<std::size_t>(g)] =
        lchoose(static_cast<double>(L), static_cast<double>(g));

  std::vector<double> pmf(static_cast<std::size_t>(L) + 1, 0.0);
  for (std::int64_t m = 0; m <= inst.T; ++m) {
    const double lw = log_binom_pmf(inst.T, m, lq0, l1mq0);
    const double lt = static_cast<double>(m) * l1mp;  // log (1-p)^m
    if (m == 0) {
      // (1-p)^0 = 1: every non-defective item is intruding.
      pmf[static_cast<std::size_t>(L)] += std::exp(lw);
      continue;
    }
    const double l1mt = log1mexp(lt);
    for (std::int64_t g = 0; g <= L; ++g) {
      const double lp = lcL[static_cast<std::size_t>(g)] +
                        static_cast<double>(g) * lt +
                        static_cast<double>(L - g) * l1mt;
      pmf[static_cast<std::size_t>(g)] += std::exp(lw + lp);
    }
  }
  return pmf;
}

namespace detail {

// log of L (L-1) ... (L-s+1).  The lgamma difference loses absolute accuracy
// once lgamma(L) is large (ulp ~ 2e-9 at L ~ 1e6), so prefer the exact
// product whenever it stays finite.
inline double log_falling_factorial(std::int64_t L, std::int64_t s) {
  if (s <= 64) {
    double ff = 1.0;
    for (std::int64_t j = 0; j < s; ++j) ff *= static_cast<double>(L - j);
    if (std::isfinite(ff)) return std::log(ff);
  }
  return lgamma_safe(static_cast<double>(L) + 1.0) -
         lgamma_safe(static_cast<double>(L - s) + 1.0);
}

}  // namespace detail

// Closed-form falling moment of G:
//   M_(s)(G) = C(n-k, s) s! (1 - q0 (1 - (1-p)^s))^T,  0 for s > n-k.
inline double falling_moment_G(const GroupTestInstance& inst, std::int64_t s) {
  if (s < 0) throw std::invalid_argument("falling_moment_G: s >= 0");
  if (s == 0) return 1.0;
  const std::int64_t L = inst.L();
  if (s > L) return 0.0;
  const double a = -std::expm1(static_cast<double>(s) * inst.log_one_minus_p());
  const double lbase = std::log1p(-inst.q0() * a);
  return std::exp(detail::log_falling_factorial(L, s) +
                  static_cast<double>(inst.T) * lbase);
}

// Falling moment of Bin(L, t): C(L, s) s! t^s; 0 for s > L.
inline double falling_moment_binomial(std::int64_t L, double t, std::int64_t s) {
  if (s < 0 || t < 0.0 || t > 1.0)
    throw std::invalid_argument("falling_moment_binomial: bad arguments");
  if (s == 0) return 1.0;
  if (s > L) return 0.0;
  if (t == 0.0) return 0.0;
  return std::exp(detail::log_falling_factorial(L, s) +
                  static_cast<double>(s) * std::log(t));
}

inline DistributionSummary distribution_summary(const GroupTestInstance& inst,
                                                std::int64_t s_max) {
  DistributionSummary out;
  out.pmf = exact_pmf_G(inst);
  out.falling_moments.reserve(static_cast<std::size_t>(s_max) + 1);
  for (std::int64_t s = 0; s <= s_max; ++s)
    out.falling_moments.push_back(falling_moment_G(inst, s));
  return out;
}

// Covariance of two intrusion indicators:
//   cov(Gi, Gj) = (1 - q0 (2p - p^2))^T - (1 - q0 p)^(2T)  >= 0.
inline double covariance_Gi_Gj(const GroupTestInstance& inst) {
  const double q0 = inst.q0();
  const double T = static_cast<double>(inst.T);
  const double a = std::exp(T * std::log1p(-q0 * (2.0 * inst.p - inst.p * inst.p)));
  const double b = std::exp(2.0 * T * std::log1p(-q0 * inst.p));
  return a - b;
}

// Ratio of successive falling-moment bases against the binomial comparison:
//   R(s) = (1 - q0 (1 - (1-p)^s)) / (1 - p q0)^s.
inline double moment_ratio_R(const GroupTestInstance& inst, std::int64_t s) {
  if (s < 0) throw std::invalid_argument("moment_ratio_R: s >= 0");
  const double a = -std::expm1(static_cast<double>(s) * inst.log_one_minus_p());
  return std::exp(std::log1p(-inst.q0() * a) -
                  static_cast<double>(s) * std::log1p(-inst.p * inst.q0()));
}

// Brute-force FKG lattice check on the joint law of the intrusion indicator
// vector: P(x or y) P(x and y) >= P(x) P(y) for all binary vectors x, y.
// Only the n-k non-defective coordinates carry randomness; their joint law
// is exchangeable, so P(x) depends on |x| only.  Enumerable for n-k <= 4.
inline bool check_fkg_bruteforce(const GroupTestInstance& inst) {
  const std::int64_t L = inst.L();
  if (L > 4)
    throw resource_error("check_fkg_bruteforce: n-k must be <= 4, got " +
                         std::to_string(L));
  const double l1mp = inst.log_one_minus_p();
  const double lq0 = static_cast<double>(inst.k) * l1mp;
  const double l1mq0 = log1mexp(lq0);

  // phi[w] = P(indicator vector has a fixed support of size w).
  std::vector<double> phi(static_cast<std::size_t>(L) + 1, 0.0);
  for (std::int64_t m = 0; m <= inst.T; ++m) {
    const double w_m = std::exp(log_binom_pmf(inst.T, m, lq0, l1mq0));
    const double lt = static_cast<double>(m) * l1mp;
    if (m == 0) {
      phi[static_cast<std::size_t>(L)] += w_m;
      continue;
    }
    const double l1mt = log1mexp(lt);
    for (std::int64_t w = 0; w <= L; ++w)
      phi[static_cast<std::size_t>(w)] +=
          w_m * std::exp(static_cast<double>(w) * lt +
                         static_cast<double>(L - w) * l1mt);
  }

  const unsigned vecs = 1u << L;
  for (unsigned x = 0; x < vecs; ++x) {
    for (unsigned y = 0; y < vecs; ++y) {
      const double lhs = phi[static_cast<std::size_t>(__builtin_popcount(x | y))] *
                         phi[static_cast<std::size_t>(__builtin_popcount(x & y))];
      const double rhs = phi[static_cast<std::size_t>(__builtin_popcount(x))] *
                         phi[static_cast<std::size_t>(__builtin_popcount(y))];
      if (lhs + 1e-12 < rhs) return false;
    }
  }
  return true;
}

}  // namespace grouptest
