#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "grouptest/errors.hpp"
#include "grouptest/mathutil.hpp"

namespace grouptest {

// Regularized upper incomplete gamma function
//   Q(s, y) = Gamma(s, y) / Gamma(s),  Gamma(s, y) = int_y^inf t^(s-1) e^-t dt,
// to ~1e-14 relative accuracy: power series for the lower function when
// y < s + 1, modified Lentz continued fraction otherwise.  s = 0 follows the
// Poisson convention Q(0+, y) = P(Po(y) < 0) = 0 for y > 0.
inline double regularized_upper_gamma(double s, double y) {
  if (!(s >= 0.0) || !(y >= 0.0))
    throw std::invalid_argument("regularized_upper_gamma: need s >= 0, y >= 0");
  if (s == 0.0) return y > 0.0 ? 0.0 : 1.0;
  if (y == 0.0) return 1.0;

  constexpr int kMaxIter = 1000000;
  constexpr double kEps = 1e-15;
  constexpr double kFpmin = 1e-300;
  const double logpre = -y + s * std::log(y) - lgamma_safe(s);

  if (y < s + 1.0) {
    // Series for the lower function P(s, y); Q = 1 - P.
    double ap = s;
    double del = 1.0 / s;
    double sum = del;
    for (int it = 0; it < kMaxIter; ++it) {
      ap += 1.0;
      del *= y / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) {
        const double P = sum * std::exp(logpre);
        const double Q = 1.0 - P;
        return Q < 0.0 ? 0.0 : (Q > 1.0 ? 1.0 : Q);
      }
    }
    throw numeric_error("regularized_upper_gamma: series not converged at s=" +
                        std::to_string(s) + " y=" + std::to_string(y));
  }

  // Lentz continued fraction for Q directly.  The CF value h is below 1
  // here (y > s), so once the prefactor underflows the result is exactly 0.
  if (logpre < -745.0) return 0.0;
  double b = y + 1.0 - s;
  double c = 1.0 / kFpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpmin) d = kFpmin;
    c = b + an / c;
    if (std::fabs(c) < kFpmin) c = kFpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      const double Q = std::exp(logpre) * h;
      return Q < 0.0 ? 0.0 : (Q > 1.0 ? 1.0 : Q);
    }
  }
  throw numeric_error("regularized_upper_gamma: continued fraction not converged at s=" +
                      std::to_string(s) + " y=" + std::to_string(y));
}

}  // namespace grouptest
