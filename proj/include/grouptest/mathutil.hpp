#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace grouptest {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Thread-safe log-gamma.  glibc's lgamma writes the global signgam, so use
// the reentrant variant where available; all arguments here are positive.
inline double lgamma_safe(double x) {
#ifdef __GLIBC__
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

// log(1 - e^x) for x <= 0, accurate near both ends.
inline double log1mexp(double x) {
  if (x >= 0.0) return kNegInf;  // only reached at x == 0
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

// log C(n, k) for real n >= k >= 0.
inline double lchoose(double n, double k) {
  if (k < 0.0 || k > n) return kNegInf;
  if (k == 0.0 || k == n) return 0.0;
  return lgamma_safe(n + 1.0) - lgamma_safe(k + 1.0) - lgamma_safe(n - k + 1.0);
}

// log Binomial(n, t) pmf at x, with the success probability supplied as the
// pair (log t, log(1-t)) so that callers can keep extreme t in log space.
inline double log_binom_pmf(std::int64_t n, std::int64_t x, double log_t,
                            double log_1mt) {
  if (x < 0 || x > n) return kNegInf;
  if (log_t == 0.0) return x == n ? 0.0 : kNegInf;    // t == 1
  if (log_1mt == 0.0) return x == 0 ? 0.0 : kNegInf;  // t == 0
  return lchoose(static_cast<double>(n), static_cast<double>(x)) +
         static_cast<double>(x) * log_t + static_cast<double>(n - x) * log_1mt;
}

// x (x-1) ... (x-s+1); 1 for s == 0.
inline double falling_factorial(double x, std::int64_t s) {
  double out = 1.0;
  for (std::int64_t j = 0; j < s; ++j) out *= x - static_cast<double>(j);
  return out;
}

}  // namespace grouptest
