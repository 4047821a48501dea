#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <thread>
#include <vector>

#include "grouptest/decode.hpp"
#include "grouptest/errors.hpp"
#include "grouptest/incgamma.hpp"
#include "grouptest/instance.hpp"
#include "grouptest/mathutil.hpp"
#include "grouptest/matrix.hpp"
#include "grouptest/rng.hpp"

namespace grouptest {

enum class Engine { MatrixLevel, MixtureLevel };

struct SimulationConfig {
  GroupTestInstance inst;
  std::int64_t trials;
  std::uint64_t seed;
  Engine engine = Engine::MixtureLevel;
};

struct EmpiricalDist {
  std::vector<std::int64_t> counts;  // index g = 0..n-k
  std::int64_t trials = 0;
};

// Exact binomial sampling by inversion, enumerating outward from the mode so
// the expected number of pmf evaluations stays O(sqrt(n t (1-t))) at every
// scale.  Any fixed enumeration order yields the exact distribution.
inline std::int64_t sample_binomial(Rng& rng, std::int64_t n, double t) {
  if (n <= 0 || t <= 0.0) return 0;
  if (t >= 1.0) return n;
  double u = rng.next_double();
  const double log_t = std::log(t);
  const double log_1mt = std::log1p(-t);
  std::int64_t mode = static_cast<std::int64_t>(
      static_cast<double>(n + 1) * t);
  if (mode > n) mode = n;
  const double odds = t / (1.0 - t);
  const double pm = std::exp(log_binom_pmf(n, mode, log_t, log_1mt));
  u -= pm;
  if (u <= 0.0) return mode;
  std::int64_t lo = mode;
  std::int64_t hi = mode;
  double plo = pm;
  double phi = pm;
  while (lo > 0 || hi < n) {
    if (hi < n) {
      phi *= odds * static_cast<double>(n - hi) / static_cast<double>(hi + 1);
      ++hi;
      u -= phi;
      if (u <= 0.0) return hi;
    }
    if (lo > 0) {
      plo *= static_cast<double>(lo) /
             (odds * static_cast<double>(n - lo + 1));
      --lo;
      u -= plo;
      if (u <= 0.0) return lo;
    }
  }
  return mode;  // u exceeded total mass by rounding; return the bulk
}

namespace detail {

constexpr std::int64_t kSimBlock = 4096;

// One block of trials.  MixtureLevel uses an RNG stream keyed by the block
// index; MatrixLevel derives one seed per trial.  Either way a trial's
// randomness is independent of scheduling, so histograms merge to the same
// result for any worker count.
inline void simulate_block(const SimulationConfig& cfg, std::int64_t block,
                           std::vector<std::int64_t>& counts) {
  const std::int64_t lo = block * kSimBlock;
  const std::int64_t hi = std::min(cfg.trials, lo + kSimBlock);
  const std::int64_t L = cfg.inst.L();
  if (cfg.engine == Engine::MixtureLevel) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(block));
    const double q0 = cfg.inst.q0();
    const double l1mp = cfg.inst.log_one_minus_p();
    for (std::int64_t i = lo; i < hi; ++i) {
      const std::int64_t m = sample_binomial(rng, cfg.inst.T, q0);
      const double t_g = std::exp(static_cast<double>(m) * l1mp);
      const std::int64_t g = sample_binomial(rng, L, t_g);
      ++counts[static_cast<std::size_t>(g)];
    }
  } else {
    const DefectiveSet d = DefectiveSet::first_k(cfg.inst.k);
    for (std::int64_t i = lo; i < hi; ++i) {
      const TestMatrix X = generate_design(
          cfg.inst, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
      const OutcomeVector y = run_tests(X, d);
      const std::int64_t g = comp_intruder_count(X, y, cfg.inst.k);
      ++counts[static_cast<std::size_t>(g)];
    }
  }
}

}  // namespace detail

inline EmpiricalDist simulate_G(const SimulationConfig& cfg,
                                unsigned workers = 0) {
  if (cfg.trials < 1) throw std::invalid_argument("simulate_G: trials >= 1");
  const std::int64_t blocks =
      (cfg.trials + detail::kSimBlock - 1) / detail::kSimBlock;
  if (workers == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    workers = hw == 0 ? 1 : hw;
  }
  if (static_cast<std::int64_t>(workers) > blocks)
    workers = static_cast<unsigned>(blocks);

  const std::size_t hist_size = static_cast<std::size_t>(cfg.inst.L()) + 1;
  EmpiricalDist dist;
  dist.counts.assign(hist_size, 0);
  dist.trials = cfg.trials;

  if (workers <= 1) {
    for (std::int64_t b = 0; b < blocks; ++b)
      detail::simulate_block(cfg, b, dist.counts);
    return dist;
  }

  std::vector<std::vector<std::int64_t>> locals(
      workers, std::vector<std::int64_t>(hist_size, 0));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::int64_t b = w; b < blocks;
           b += static_cast<std::int64_t>(workers))
        detail::simulate_block(cfg, b, locals[w]);
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::vector<std::int64_t>& local : locals)
    for (std::size_t g = 0; g < hist_size; ++g) dist.counts[g] += local[g];
  return dist;
}

inline double empirical_falling_moment(const EmpiricalDist& dist,
                                       std::int64_t s) {
  if (s < 0) throw std::invalid_argument("empirical_falling_moment: s >= 0");
  if (dist.trials < 1)
    throw std::invalid_argument("empirical_falling_moment: empty histogram");
  double sum = 0.0;
  for (std::size_t g = 0; g < dist.counts.size(); ++g) {
    if (dist.counts[g] == 0) continue;
    const double ff = falling_factorial(static_cast<double>(g), s);
    sum += static_cast<double>(dist.counts[g]) * ff;
  }
  return sum / static_cast<double>(dist.trials);
}

inline std::vector<double> to_pmf(const EmpiricalDist& dist) {
  std::vector<double> pmf(dist.counts.size());
  for (std::size_t g = 0; g < pmf.size(); ++g)
    pmf[g] = static_cast<double>(dist.counts[g]) /
             static_cast<double>(dist.trials);
  return pmf;
}

// Half the L1 distance between two pmfs on the non-negative integers.
inline double tv_distance(const std::vector<double>& a,
                          const std::vector<double>& b) {
  double sa = 0.0;
  double sb = 0.0;
  for (double v : a) sa += v;
  for (double v : b) sb += v;
  if (std::abs(sa - 1.0) > 1e-9 || std::abs(sb - 1.0) > 1e-9)
    throw std::invalid_argument("tv_distance: inputs must be normalized");
  const std::size_t m = std::max(a.size(), b.size());
  double sum = 0.0;
  for (std::size_t z = 0; z < m; ++z) {
    const double av = z < a.size() ? a[z] : 0.0;
    const double bv = z < b.size() ? b[z] : 0.0;
    sum += std::abs(av - bv);
  }
  return 0.5 * sum;
}

struct TwoStageErrorEstimate {
  std::int64_t failures;
  double rate;
  double se;
};

// Monte Carlo estimate of P(G > T2 - k) after a T1-test first stage.
inline TwoStageErrorEstimate simulate_two_stage_error(
    const GroupTestInstance& inst, std::int64_t T1, std::int64_t T2,
    std::int64_t trials, std::uint64_t seed,
    Engine engine = Engine::MixtureLevel) {
  if (T2 < 0) throw std::invalid_argument("simulate_two_stage_error: T2 >= 0");
  SimulationConfig cfg{inst.with_T(T1), trials, seed, engine};
  const EmpiricalDist dist = simulate_G(cfg);
  std::int64_t failures = 0;
  const std::int64_t threshold = T2 - inst.k;  // fail iff G > threshold
  for (std::size_t g = 0; g < dist.counts.size(); ++g)
    if (static_cast<std::int64_t>(g) > threshold) failures += dist.counts[g];
  TwoStageErrorEstimate est;
  est.failures = failures;
  est.rate = static_cast<double>(failures) / static_cast<double>(trials);
  est.se = std::sqrt(est.rate * (1.0 - est.rate) /
                     static_cast<double>(trials));
  return est;
}

struct ChiSquareResult {
  double statistic;
  std::int64_t df;
  double p_value;
  std::int64_t bins;
};

// Two-sample chi-squared homogeneity test on pooled histogram bins.  Bins are
// pooled left to right until each holds at least 10 combined counts; any
// remainder joins the last pooled bin.
inline ChiSquareResult chi_square_two_sample(
    const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  const std::size_t m = std::max(a.size(), b.size());
  std::vector<std::pair<double, double>> pooled;
  double ca = 0.0;
  double cb = 0.0;
  for (std::size_t z = 0; z < m; ++z) {
    ca += z < a.size() ? static_cast<double>(a[z]) : 0.0;
    cb += z < b.size() ? static_cast<double>(b[z]) : 0.0;
    if (ca + cb >= 10.0) {
      pooled.emplace_back(ca, cb);
      ca = 0.0;
      cb = 0.0;
    }
  }
  if (ca + cb > 0.0) {
    if (pooled.empty()) {
      pooled.emplace_back(ca, cb);
    } else {
      pooled.back().first += ca;
      pooled.back().second += cb;
    }
  }
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [pa, pb] : pooled) {
    na += pa;
    nb += pb;
  }
  if (na <= 0.0 || nb <= 0.0)
    throw std::invalid_argument("chi_square_two_sample: empty sample");
  const double k1 = std::sqrt(nb / na);
  const double k2 = std::sqrt(na / nb);
  double stat = 0.0;
  for (const auto& [pa, pb] : pooled) {
    const double tot = pa + pb;
    if (tot <= 0.0) continue;
    const double diff = k1 * pa - k2 * pb;
    stat += diff * diff / tot;
  }
  ChiSquareResult res;
  res.statistic = stat;
  res.bins = static_cast<std::int64_t>(pooled.size());
  res.df = res.bins - 1;
  res.p_value = res.df > 0
                    ? regularized_upper_gamma(
                          0.5 * static_cast<double>(res.df), 0.5 * stat)
                    : 1.0;
  return res;
}

inline void write_histogram_csv(const EmpiricalDist& dist,
                                std::ostream& out) {
  out << "g,count,empirical_prob\n";
  char buf[64];
  for (std::size_t g = 0; g < dist.counts.size(); ++g) {
    std::snprintf(buf, sizeof(buf), "%.10g",
                  static_cast<double>(dist.counts[g]) /
                      static_cast<double>(dist.trials));
    out << g << ',' << dist.counts[g] << ',' << buf << '\n';
  }
}

}  // namespace grouptest
