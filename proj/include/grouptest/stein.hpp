#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "grouptest/errors.hpp"
#include "grouptest/incgamma.hpp"
#include "grouptest/instance.hpp"
#include "grouptest/negbin.hpp"

namespace grouptest {

// Parameters of the mixed-Poisson surrogate and its negative binomial
// approximation.  lam = T q0 and lam_p = T p q0 = log K are cached because
// every downstream formula consumes them.
struct SteinParams {
  double mu;
  double sigma2;
  double q;
  double one_minus_q;
  double r;
  double K;
  double lam;
  double lam_p;
};

inline double alpha_q0(double q0) {
  if (!(q0 > 0.0) || !(q0 < 1.0))
    throw std::invalid_argument("alpha_q0: need 0 < q0 < 1");
  const double one_minus = 1.0 - q0;
  return 0.4748 *
         (std::sqrt(one_minus) * (1.0 + 2.0 * q0 * q0 * std::exp(-q0)) +
          q0 * q0 + one_minus * one_minus) /
         std::sqrt(q0 * one_minus);
}

inline SteinParams stein_params(const GroupTestInstance& inst) {
  if (inst.T == 0)
    throw degenerate_error(
        "stein_params: T = 0 gives sigma2 = mu, no surrogate dispersion");
  const double q0 = inst.q0();
  const double Td = static_cast<double>(inst.T);
  const double Ld = static_cast<double>(inst.L());
  SteinParams sp;
  sp.lam = Td * q0;
  sp.lam_p = Td * inst.p * q0;
  sp.K = std::exp(sp.lam_p);
  sp.mu = Ld * std::exp(-sp.lam_p);
  const double d = Ld * Ld *
                   std::exp(-Td * inst.p * (2.0 - inst.p) * q0) *
                   (-std::expm1(-Td * inst.p * inst.p * q0));
  sp.sigma2 = sp.mu + d;
  sp.q = sp.mu / sp.sigma2;
  sp.one_minus_q = d / sp.sigma2;
  sp.r = 1.0 / std::expm1(Td * inst.p * inst.p * q0);
  return sp;
}

inline NegBinParams stein_negbin(const SteinParams& sp) {
  NegBinParams params;
  params.r = sp.r;
  params.q = sp.q;
  params.one_minus_q = sp.one_minus_q;
  params.log_odds = std::log(sp.one_minus_q) - std::log(sp.q);
  params.provenance = NbProvenance::SteinMixed;
  return params;
}

namespace detail {

// 16-point Gauss-Legendre rule: positive abscissae and weights on [-1, 1].
inline constexpr double kGl16Nodes[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
inline constexpr double kGl16Weights[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

template <class F>
double gl16(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = h * kGl16Nodes[i];
    sum += kGl16Weights[i] * (f(c - dx) + f(c + dx));
  }
  return h * sum;
}

template <class F>
double adaptive_gl16(const F& f, double a, double b, double tol, int depth,
                     const std::string& where) {
  const double mid = 0.5 * (a + b);
  const double whole = gl16(f, a, b);
  const double halves = gl16(f, a, mid) + gl16(f, mid, b);
  // Accept on the requested absolute tolerance; tol carries a floor set by
  // the caller at the rounding noise of the integrand evaluations, below
  // which refinement cannot improve agreement.
  if (std::abs(whole - halves) <= tol ||
      std::abs(whole - halves) <= 1e-13 * std::abs(halves) || b - a < 1e-300)
    return halves;
  if (depth >= 40)
    throw numeric_error("stein_integral: quadrature did not converge on " +
                        where);
  return adaptive_gl16(f, a, mid, 0.5 * tol, depth + 1, where) +
         adaptive_gl16(f, mid, b, 0.5 * tol, depth + 1, where);
}

struct SteinIntegralResult {
  double value;
  std::int64_t segments;
};

// Integrand |Q(ceil(log x / log(1-p)), T q0) - Q(r, K r x)|: the first
// argument is the constant m+1 on the segment ((1-p)^{m+1}, (1-p)^m), so the
// integral is a sum of per-segment pieces.  Inside a segment the signed
// difference is increasing in x (the second Q decreases), so it crosses zero
// at most once; the crossing is located by bisection and the quadrature runs
// on the smooth pieces either side of it.  Segments are dropped once the
// remaining head [0, (1-p)^M] is shorter than tol/2 (integrand is <= 1).
inline SteinIntegralResult stein_integral_impl(const GroupTestInstance& inst,
                                               const SteinParams& sp,
                                               double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("stein_integral: tol > 0");
  const double l1mp = inst.log_one_minus_p();
  const double m_real = std::log(0.5 * tol) / l1mp;
  if (!(m_real < 1e7))
    throw resource_error("stein_integral: segment count exceeds 1e7");
  const std::int64_t seg_count =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(m_real)));
  const double log_r = std::log(sp.r);

  const auto q2 = [&](double x) {
    if (x <= 0.0) return 1.0;
    const double ly = sp.lam_p + log_r + std::log(x);
    if (ly > 700.0) return 0.0;
    return regularized_upper_gamma(sp.r, std::exp(ly));
  };

  double total = 0.0;
  double right = 1.0;
  for (std::int64_t m = 0; m < seg_count; ++m) {
    const double left = std::exp(static_cast<double>(m + 1) * l1mp);
    const double q1 =
        regularized_upper_gamma(static_cast<double>(m + 1), sp.lam);
    const auto f = [&](double x) { return std::abs(q1 - q2(x)); };
    const std::string where = "segment m=" + std::to_string(m);
    const double q2_left = q2(left);
    const double ga = q1 - q2_left;
    const double gb = q1 - q2(right);
    // Near a crease f can be orders of magnitude below q1 and q2, while its
    // evaluation noise stays proportional to them -- or absolute (a few ulp
    // of 1) when a Q value comes out of 1 - P with P close to 1.  Floor the
    // per-piece tolerance at that noise level so refinement terminates.
    const double noise = 4e-15 + 1e-14 * (q1 + q2_left);
    const auto piece_tol = [&](double len) {
      return std::max(0.5 * tol * len, noise * len);
    };
    if (ga < 0.0 && gb > 0.0) {
      double a = left;
      double b = right;
      for (int it = 0; it < 200 && b - a > 1e-16 * b; ++it) {
        const double mid = 0.5 * (a + b);
        (q1 - q2(mid) < 0.0 ? a : b) = mid;
      }
      const double crease = 0.5 * (a + b);
      total += adaptive_gl16(f, left, crease, piece_tol(crease - left), 0,
                             where) +
               adaptive_gl16(f, crease, right, piece_tol(right - crease), 0,
                             where);
    } else {
      total += adaptive_gl16(f, left, right, piece_tol(right - left), 0,
                             where);
    }
    right = left;
  }
  return {total, seg_count};
}

}  // namespace detail

inline double stein_integral(const GroupTestInstance& inst,
                             const SteinParams& sp, double tol = 1e-8) {
  return detail::stein_integral_impl(inst, sp, tol).value;
}

// Total-variation bound decomposition.  The gamma-tail and integral terms
// carry the (2-q)(n-k)/(1-q) prefactor, so total is the plain sum of the four
// terms.  integrand_breakpoints counts quadrature segments.
struct BoundReport {
  double total;
  double term_binomial_poisson;
  double term_mixture;
  double term_gamma_tail;
  double term_integral;
  std::int64_t integrand_breakpoints;
};

inline BoundReport stein_bound(const GroupTestInstance& inst) {
  constexpr double kInvSqrt2PiE = 0.24197072451914335;
  const SteinParams sp = stein_params(inst);
  const double q0 = inst.q0();
  const double term_a = q0 / (4.0 * std::sqrt(1.0 - q0));
  const double term_b =
      alpha_q0(q0) / std::sqrt(static_cast<double>(inst.T)) +
      kInvSqrt2PiE * (-0.5 * std::log1p(-q0));
  const double pref =
      static_cast<double>(inst.L()) * (1.0 + 1.0 / sp.one_minus_q);
  const double gtail =
      std::exp(sp.r + 1.0 + sp.r * sp.lam_p - sp.r * sp.K);
  const double tol_i = std::max(std::min(1e-9, 1e-5 / pref), 1e-30);
  const detail::SteinIntegralResult integ =
      detail::stein_integral_impl(inst, sp, tol_i);

  BoundReport rep;
  rep.term_binomial_poisson = 2.0 * std::min(term_a, term_b);
  rep.term_mixture = std::exp(-sp.lam_p);
  rep.term_gamma_tail = pref * gtail;
  rep.term_integral = pref * integ.value;
  rep.total = rep.term_binomial_poisson + rep.term_mixture +
              rep.term_gamma_tail + rep.term_integral;
  rep.integrand_breakpoints = integ.segments;
  return rep;
}

// Closed-form alternative to the quadrature: Chernoff bounds on the Poisson
// and gamma tails split at 1 -+ eps.  When a Poisson-piece validity condition
// fails, that piece is replaced by 1 (still a correct bound, since the
// integrand is <= 1) and the corresponding flag is cleared.
struct ChernoffIntegralBound {
  double value;
  bool lower_tail_valid;
  bool upper_tail_valid;
  bool applicable;
};

inline ChernoffIntegralBound chernoff_integral_bound(
    const GroupTestInstance& inst, const SteinParams& sp, double eps) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw std::invalid_argument("chernoff_integral_bound: need 0 < eps < 1");
  const auto m_fn = [](double s) { return s - std::log1p(s); };
  const auto h_fn = [](double s) { return (1.0 + s) * std::log1p(s) - s; };

  const double eta_hi = std::exp(-sp.r * m_fn(eps));
  const double eta_lo = std::exp(-sp.r * m_fn(-eps));

  ChernoffIntegralBound out;
  const double a_up = -std::log1p(eps) / sp.lam_p;
  out.upper_tail_valid = a_up > -1.0;
  const double xi_hi =
      out.upper_tail_valid ? std::exp(-sp.lam * h_fn(a_up)) : 1.0;

  const double num = -std::log1p(-eps) - sp.lam * m_fn(-inst.p);
  out.lower_tail_valid = num > 0.0;
  const double den = sp.lam * (-inst.log_one_minus_p());
  const double xi_lo =
      out.lower_tail_valid ? std::exp(-sp.lam * h_fn(num / den)) : 1.0;

  out.value = 2.0 * eps / sp.K + std::max(xi_lo, eta_lo) / sp.K +
              std::max(xi_hi, eta_hi);
  out.applicable = out.lower_tail_valid && out.upper_tail_valid;
  return out;
}

enum class TailSide { Lower, Upper };

struct ChernoffTail {
  double value;
  bool valid;
};

// Chernoff bound for a Gamma(alpha, beta) tail: exp(alpha(1 + log(beta z /
// alpha)) - beta z).  The upper-tail direction needs z at or above the mean
// alpha/beta, the lower-tail direction z at or below it; at z = alpha/beta
// both sides give exactly 1.
inline ChernoffTail chernoff_gamma_tail(double alpha, double beta, double z,
                                        TailSide side) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(z > 0.0))
    throw std::invalid_argument(
        "chernoff_gamma_tail: need alpha, beta, z > 0");
  ChernoffTail out;
  out.value = std::exp(alpha * (1.0 + std::log(beta * z / alpha)) - beta * z);
  out.valid =
      side == TailSide::Upper ? z >= alpha / beta : z <= alpha / beta;
  return out;
}

}  // namespace grouptest
