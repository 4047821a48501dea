#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace grouptest {

// Problem parameters for a Bernoulli group-testing design: n items of which
// k are defective, each item joining each of T tests independently with
// probability p.  q0 = (1-p)^k is the probability a single test is negative.
struct GroupTestInstance {
  std::int64_t n;
  std::int64_t k;
  double p;
  std::int64_t T;

  GroupTestInstance(std::int64_t n_, std::int64_t k_, double p_,
                    std::int64_t T_)
      : n(n_), k(k_), p(p_), T(T_) {
    if (k <= 0 || k >= n)
      throw std::invalid_argument("GroupTestInstance: need 0 < k < n, got k=" +
                                  std::to_string(k) + " n=" + std::to_string(n));
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("GroupTestInstance: need 0 < p < 1");
    if (T < 0) throw std::invalid_argument("GroupTestInstance: need T >= 0");
  }

  // Number of non-defective items.
  std::int64_t L() const { return n - k; }

  double log_one_minus_p() const { return std::log1p(-p); }

  // (1-p)^k in log space; k can be large without underflow on the way.
  double q0() const {
    return std::exp(static_cast<double>(k) * std::log1p(-p));
  }

  // 1 - q0, computed without cancellation for q0 near 1.
  double one_minus_q0() const {
    return -std::expm1(static_cast<double>(k) * std::log1p(-p));
  }

  GroupTestInstance with_T(std::int64_t T_) const {
    return GroupTestInstance(n, k, p, T_);
  }
};

}  // namespace grouptest
