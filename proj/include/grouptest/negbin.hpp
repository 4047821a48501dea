#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "grouptest/errors.hpp"
#include "grouptest/exact_dist.hpp"
#include "grouptest/instance.hpp"
#include "grouptest/mathutil.hpp"

namespace grouptest {

enum class NbProvenance { MomentMatched, SteinMixed };

// Negative binomial NB(r, q): f(z) = Gamma(z+r)/(Gamma(r) z!) q^r (1-q)^z.
// Both q and 1-q are stored: near-degenerate fits can have 1-q below machine
// epsilon relative to 1, where the rounded q alone would destroy the fit
// identities.  log_odds caches log((1-q)/q), set exactly by the fitters.
struct NegBinParams {
  double r;
  double q;
  double one_minus_q;
  double log_odds;
  NbProvenance provenance;

  double mean() const { return r * one_minus_q / q; }
  double log_q() const { return std::log1p(-one_minus_q); }
  double log_one_minus_q() const { return std::log(one_minus_q); }
};

inline NegBinParams make_negbin(double r, double q, NbProvenance prov) {
  if (!(r > 0.0) || !(q > 0.0) || !(q < 1.0))
    throw std::invalid_argument("make_negbin: need r > 0 and 0 < q < 1");
  NegBinParams params;
  params.r = r;
  params.q = q;
  params.one_minus_q = 1.0 - q;
  params.log_odds = std::log(params.one_minus_q) - std::log(q);
  params.provenance = prov;
  return params;
}

inline double nb_pmf(const NegBinParams& params, std::int64_t z) {
  if (z < 0) return 0.0;
  const double zd = static_cast<double>(z);
  return std::exp(lgamma_safe(zd + params.r) - lgamma_safe(params.r) -
                  lgamma_safe(zd + 1.0) + params.r * params.log_q() +
                  zd * params.log_one_minus_q());
}

// M_(s)(Z) = Gamma(s+r)/Gamma(r) ((1-q)/q)^s.
inline double nb_falling_moment(const NegBinParams& params, std::int64_t s) {
  if (s < 0) throw std::invalid_argument("nb_falling_moment: s >= 0");
  if (s == 0) return 1.0;
  const double sd = static_cast<double>(s);
  return std::exp(lgamma_safe(sd + params.r) - lgamma_safe(params.r) +
                  sd * params.log_odds);
}

// Moment-matched fit: r = M1^2/(M2 - M1^2), q = M1/(M2 + M1 - M1^2),
// evaluated in the cancellation-free form
//   ln R2 = ln[(1 - q0(2p - p^2)) / (1 - q0 p)^2],
//   r = 1 / expm1(T ln R2 + log1p(-1/L)),   q = r / (r + M1),
// which keeps the fit exact when the overdispersion M2/M1^2 - 1 is at or
// below machine epsilon.
inline NegBinParams fit_moment_matched(const GroupTestInstance& inst) {
  const double q0 = inst.q0();
  const double Ld = static_cast<double>(inst.L());
  const double m1 = falling_moment_G(inst, 1);
  const double lnR2 = std::log1p(-q0 * (2.0 * inst.p - inst.p * inst.p)) -
                      2.0 * std::log1p(-q0 * inst.p);
  const double x = static_cast<double>(inst.T) * lnR2 + std::log1p(-1.0 / Ld);
  if (!(x > 0.0))
    throw degenerate_error(
        "fit_moment_matched: variance <= mean (M2 <= M1^2); no negative "
        "binomial fit exists, use a Poisson approximation instead");
  NegBinParams params;
  params.r = 1.0 / std::expm1(x);
  params.q = params.r / (params.r + m1);
  params.one_minus_q = m1 / (params.r + m1);
  params.log_odds = std::log(m1) - std::log(params.r);
  params.provenance = NbProvenance::MomentMatched;
  return params;
}

// One row of the moment comparison table: the exact falling moment of G next
// to mean-matched approximating distributions (negative binomial matches the
// first two moments; Poisson, geometric and binomial match the mean).
struct ComparisonMoments {
  std::int64_t s;
  double G;  // exact
  double Z;  // negative binomial, moment matched
  double Y;  // Poisson: lambda^s
  double X;  // geometric: s! lambda^s
  double H;  // binomial Bin(n-k, (1-p q0)^T)
};

inline std::vector<ComparisonMoments> comparison_table(
    const GroupTestInstance& inst, std::int64_t s_max) {
  if (s_max < 0) throw std::invalid_argument("comparison_table: s_max >= 0");
  const NegBinParams nb = fit_moment_matched(inst);
  const double log_m1 = std::log(falling_moment_G(inst, 1));
  const double Ld = static_cast<double>(inst.L());
  const double lH_base = static_cast<double>(inst.T) *
                         std::log1p(-inst.p * inst.q0());  // log (1-p q0)^T
  std::vector<ComparisonMoments> rows;
  for (std::int64_t s = 1; s <= s_max; ++s) {
    const double sd = static_cast<double>(s);
    ComparisonMoments row;
    row.s = s;
    row.G = falling_moment_G(inst, s);
    row.Z = nb_falling_moment(nb, s);
    row.Y = std::exp(sd * log_m1);
    row.X = std::exp(lgamma_safe(sd + 1.0) + sd * log_m1);
    row.H = s > inst.L()
                ? 0.0
                : std::exp(lgamma_safe(Ld + 1.0) - lgamma_safe(Ld - sd + 1.0) +
                           sd * lH_base);
    if (nb.r >= 1.0) {
      // Guaranteed ordering X >= Z >= Y >= H for r >= 1; tolerate rounding.
      const double slack = 1e-9 * row.X;
      if (!(row.X + slack >= row.Z && row.Z + slack >= row.Y &&
            row.Y + slack >= row.H))
        throw numeric_error("comparison_table: moment ordering violated at s=" +
                            std::to_string(s));
    }
    rows.push_back(row);
  }
  return rows;
}

// Two-sided bound on the ratio M_(s)(G) / M_(s)(Z) for the moment-matched Z:
//   lower = ((L-s)/(L (1+(s-1)/(2r))))^s (1 + s(s-1)/2 C p^2 (1 - (s-2)(1-2q0)p/(3(1-q0 p))))^T
//   upper = exp(s(s-1) C p^2 T (1-q0 p)^(2-s)),   C = q0(1-q0)/(1-q0 p)^2.
// When the lower expression is not positive it carries no information; it is
// reported as 0 with the vacuous flag set.
struct MomentRatioBounds {
  double lower;
  double upper;
  double actual;
  bool vacuous;
};

inline MomentRatioBounds moment_ratio_bounds(const GroupTestInstance& inst,
                                             std::int64_t s) {
  if (s < 1) throw std::invalid_argument("moment_ratio_bounds: s >= 1");
  const NegBinParams nb = fit_moment_matched(inst);
  const double q0 = inst.q0();
  const double p = inst.p;
  const double Ld = static_cast<double>(inst.L());
  const double sd = static_cast<double>(s);
  const double Td = static_cast<double>(inst.T);
  const double C = q0 * inst.one_minus_q0() / ((1.0 - q0 * p) * (1.0 - q0 * p));

  MomentRatioBounds out;
  out.actual = falling_moment_G(inst, s) / nb_falling_moment(nb, s);
  out.upper = std::exp(sd * (sd - 1.0) * C * p * p * Td *
                       std::pow(1.0 - q0 * p, 2.0 - sd));
  const double lead = (Ld - sd) / (Ld * (1.0 + (sd - 1.0) / (2.0 * nb.r)));
  const double inner =
      1.0 + 0.5 * sd * (sd - 1.0) * C * p * p *
                (1.0 - (sd - 2.0) * (1.0 - 2.0 * q0) * p / (3.0 * (1.0 - q0 * p)));
  if (lead <= 0.0 || inner <= 0.0) {
    out.lower = 0.0;
    out.vacuous = true;
  } else {
    out.lower = std::exp(sd * std::log(lead) + Td * std::log(inner));
    out.vacuous = false;
  }
  return out;
}

// Large-deviations tail bound (Kullback-Leibler form):
//   P(Z >= g) <= exp(-(g+r) KL(g/(g+r) || 1-q))   for g above the mean.
// Below the mean the bound direction fails; value 1 with the vacuous flag.
struct NbTailBound {
  double value;
  bool vacuous;
};

inline NbTailBound nb_tail_bound(const NegBinParams& params, double g) {
  NbTailBound out;
  if (!(g > params.mean())) {
    out.value = 1.0;
    out.vacuous = true;
    return out;
  }
  const double v = g / (g + params.r);
  const double one_minus_v = params.r / (g + params.r);
  const double kl = v * (std::log(v) - params.log_one_minus_q()) +
                    one_minus_v * (std::log(one_minus_v) - params.log_q());
  out.value = std::exp(-(g + params.r) * kl);
  if (out.value > 1.0) out.value = 1.0;
  out.vacuous = false;
  return out;
}

// Smallest z* with tail bound below tol; used to truncate pmf sums.
inline std::int64_t nb_truncation_point(const NegBinParams& params,
                                        double tol = 1e-12) {
  std::int64_t z = static_cast<std::int64_t>(std::ceil(params.mean())) + 2;
  for (int it = 0; it < 200; ++it) {
    const NbTailBound b = nb_tail_bound(params, static_cast<double>(z));
    if (!b.vacuous && b.value < tol) return z;
    z = z < 4 ? z + 4 : z * 2;
  }
  throw numeric_error("nb_truncation_point: tail bound did not reach tol");
}

inline std::vector<double> nb_pmf_vector(const NegBinParams& params,
                                         std::int64_t z_max) {
  std::vector<double> out(static_cast<std::size_t>(z_max) + 1);
  for (std::int64_t z = 0; z <= z_max; ++z)
    out[static_cast<std::size_t>(z)] = nb_pmf(params, z);
  return out;
}

}  // namespace grouptest
