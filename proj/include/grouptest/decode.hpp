#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "grouptest/matrix.hpp"

namespace grouptest {

// Result of a decoding pass.  `estimate` is the declared-defective set; the
// scored variants additionally report `intruders` (declared defectives that
// are not truly defective) and their count G.
struct DecodeResult {
  std::vector<std::int64_t> estimate;
  std::vector<std::int64_t> intruders;
  std::int64_t G = 0;
};

namespace detail {

// Bitmask (one word per 64 items) of items appearing in some negative test;
// those items are cleared by COMP.
inline std::vector<std::uint64_t> comp_cleared_mask(const TestMatrix& X,
                                                    const OutcomeVector& y) {
  if (y.size() != X.rows())
    throw std::invalid_argument("decode: outcome length != matrix rows");
  std::vector<std::uint64_t> cleared(static_cast<std::size_t>(X.words_per_row()), 0);
  for (std::int64_t t = 0; t < X.rows(); ++t) {
    if (y.y[static_cast<std::size_t>(t)]) continue;
    const std::uint64_t* r = X.row(t);
    for (std::int64_t w = 0; w < X.words_per_row(); ++w) cleared[w] |= r[w];
  }
  return cleared;
}

inline std::vector<std::int64_t> mask_to_items(const std::vector<std::uint64_t>& cleared,
                                               std::int64_t n, bool complement) {
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < n; ++i) {
    const bool c = (cleared[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1ULL;
    if (c == complement) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace detail

// COMP: declare non-defective exactly the items appearing in some negative
// test; everything else is declared defective.
inline DecodeResult decode_comp(const TestMatrix& X, const OutcomeVector& y) {
  DecodeResult res;
  res.estimate = detail::mask_to_items(detail::comp_cleared_mask(X, y), X.cols(),
                                       /*complement=*/true);
  return res;
}

// Scored COMP: also splits the estimate against the true defective set.
inline DecodeResult decode_comp(const TestMatrix& X, const OutcomeVector& y,
                                const DefectiveSet& K) {
  DecodeResult res = decode_comp(X, y);
  for (std::int64_t i : res.estimate) {
    if (!K.contains(i)) res.intruders.push_back(i);
  }
  res.G = static_cast<std::int64_t>(res.intruders.size());
  return res;
}

// Count of COMP intruders when the defective items are 0..k-1; avoids
// materializing index vectors (simulation fast path).
inline std::int64_t comp_intruder_count(const TestMatrix& X,
                                        const OutcomeVector& y,
                                        std::int64_t k) {
  const std::vector<std::uint64_t> cleared = detail::comp_cleared_mask(X, y);
  std::int64_t cleared_nondef = 0;
  const std::int64_t n = X.cols();
  const std::uint64_t tail = X.tail_mask();
  for (std::int64_t w = 0; w < X.words_per_row(); ++w) {
    std::uint64_t bits = cleared[static_cast<std::size_t>(w)];
    if (w == X.words_per_row() - 1) bits &= tail;
    // Drop defective positions (indices < k) from the count.
    const std::int64_t base = w * 64;
    if (base < k) {
      const std::int64_t hi = std::min<std::int64_t>(k - base, 64);
      const std::uint64_t defmask = hi == 64 ? ~0ULL : ((1ULL << hi) - 1);
      bits &= ~defmask;
    }
    cleared_nondef += __builtin_popcountll(bits);
  }
  return (n - k) - cleared_nondef;  // non-defectives never cleared = intruders
}

// DD: an item is declared defective iff it is the unique non-cleared item of
// some positive test; all other items are declared non-defective.
inline DecodeResult decode_dd(const TestMatrix& X, const OutcomeVector& y) {
  const std::vector<std::uint64_t> cleared = detail::comp_cleared_mask(X, y);
  std::vector<bool> declared(static_cast<std::size_t>(X.cols()), false);
  for (std::int64_t t = 0; t < X.rows(); ++t) {
    if (!y.y[static_cast<std::size_t>(t)]) continue;
    const std::uint64_t* r = X.row(t);
    std::int64_t unique_item = -1;
    int count = 0;
    for (std::int64_t w = 0; w < X.words_per_row() && count < 2; ++w) {
      std::uint64_t bits = r[w] & ~cleared[static_cast<std::size_t>(w)];
      if (w == X.words_per_row() - 1) bits &= X.tail_mask();
      while (bits) {
        unique_item = w * 64 + __builtin_ctzll(bits);
        bits &= bits - 1;
        if (++count >= 2) break;
      }
    }
    if (count == 1) declared[static_cast<std::size_t>(unique_item)] = true;
  }
  DecodeResult res;
  for (std::int64_t i = 0; i < X.cols(); ++i) {
    if (declared[static_cast<std::size_t>(i)]) res.estimate.push_back(i);
  }
  return res;
}

inline DecodeResult decode_dd(const TestMatrix& X, const OutcomeVector& y,
                              const DefectiveSet& K) {
  DecodeResult res = decode_dd(X, y);
  for (std::int64_t i : res.estimate) {
    if (!K.contains(i)) res.intruders.push_back(i);
  }
  res.G = static_cast<std::int64_t>(res.intruders.size());
  return res;
}

struct TwoStageOutcome {
  bool success;
  std::int64_t stage2_items;
};

// Conservative two-stage run: COMP on T1 tests, then individual tests for
// every item COMP did not clear.  Individual tests are noiseless, so stage 2
// is resolved analytically: the run succeeds iff the T2 remaining tests
// cover all k + G non-cleared items.
inline TwoStageOutcome run_two_stage(const GroupTestInstance& inst,
                                     const DefectiveSet& K, std::int64_t T1,
                                     std::int64_t T2, std::uint64_t seed) {
  if (T1 < 0 || T2 < 0) throw std::invalid_argument("run_two_stage: T1, T2 >= 0");
  const GroupTestInstance stage1 = inst.with_T(T1);
  const TestMatrix X = generate_design(stage1, seed);
  const OutcomeVector y = run_tests(X, K);
  const DecodeResult res = decode_comp(X, y, K);
  TwoStageOutcome out;
  out.stage2_items = static_cast<std::int64_t>(res.estimate.size());
  out.success = out.stage2_items <= T2;
  return out;
}

}  // namespace grouptest
