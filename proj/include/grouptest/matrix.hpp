#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "grouptest/instance.hpp"
#include "grouptest/rng.hpp"

namespace grouptest {

// A realized T x n binary design, rows packed into 64-bit words.
class TestMatrix {
 public:
  TestMatrix(std::int64_t T, std::int64_t n)
      : T_(T), n_(n), wpr_((n + 63) / 64), bits_(static_cast<std::size_t>(T * wpr_), 0) {
    if (T < 0 || n <= 0) throw std::invalid_argument("TestMatrix: bad shape");
  }

  std::int64_t rows() const { return T_; }
  std::int64_t cols() const { return n_; }
  std::int64_t words_per_row() const { return wpr_; }

  bool get(std::int64_t t, std::int64_t i) const {
    return (row(t)[i >> 6] >> (i & 63)) & 1ULL;
  }
  void set(std::int64_t t, std::int64_t i, bool v) {
    std::uint64_t& w = bits_[static_cast<std::size_t>(t * wpr_ + (i >> 6))];
    const std::uint64_t m = 1ULL << (i & 63);
    w = v ? (w | m) : (w & ~m);
  }

  const std::uint64_t* row(std::int64_t t) const {
    return bits_.data() + static_cast<std::size_t>(t * wpr_);
  }
  std::uint64_t* row(std::int64_t t) {
    return bits_.data() + static_cast<std::size_t>(t * wpr_);
  }

  // Mask for the valid bits of the final word of a row.
  std::uint64_t tail_mask() const {
    const int rem = static_cast<int>(n_ & 63);
    return rem == 0 ? ~0ULL : ((1ULL << rem) - 1);
  }

  // '0'/'1' characters, one row per line; debugging format.
  std::string serialize() const {
    std::string out;
    out.reserve(static_cast<std::size_t>(T_ * (n_ + 1)));
    for (std::int64_t t = 0; t < T_; ++t) {
      for (std::int64_t i = 0; i < n_; ++i) out.push_back(get(t, i) ? '1' : '0');
      out.push_back('\n');
    }
    return out;
  }

  static TestMatrix deserialize(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        if (!cur.empty()) lines.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) lines.push_back(cur);
    if (lines.empty()) throw std::invalid_argument("TestMatrix: empty text");
    TestMatrix X(static_cast<std::int64_t>(lines.size()),
                 static_cast<std::int64_t>(lines[0].size()));
    for (std::size_t t = 0; t < lines.size(); ++t) {
      if (lines[t].size() != lines[0].size())
        throw std::invalid_argument("TestMatrix: ragged rows");
      for (std::size_t i = 0; i < lines[t].size(); ++i) {
        if (lines[t][i] != '0' && lines[t][i] != '1')
          throw std::invalid_argument("TestMatrix: non-binary character");
        X.set(static_cast<std::int64_t>(t), static_cast<std::int64_t>(i),
              lines[t][i] == '1');
      }
    }
    return X;
  }

 private:
  std::int64_t T_, n_, wpr_;
  std::vector<std::uint64_t> bits_;
};

// The set of truly defective items.  By convention the model places them at
// indices 0..k-1 (the design is exchangeable); an arbitrary set can be given
// for decoder tests.
struct DefectiveSet {
  std::vector<std::int64_t> members;  // sorted, unique

  static DefectiveSet first_k(std::int64_t k) {
    DefectiveSet K;
    K.members.resize(static_cast<std::size_t>(k));
    std::iota(K.members.begin(), K.members.end(), 0);
    return K;
  }

  static DefectiveSet of(std::vector<std::int64_t> items) {
    DefectiveSet K;
    K.members = std::move(items);
    std::sort(K.members.begin(), K.members.end());
    K.members.erase(std::unique(K.members.begin(), K.members.end()),
                    K.members.end());
    return K;
  }

  bool contains(std::int64_t i) const {
    return std::binary_search(members.begin(), members.end(), i);
  }
  std::int64_t size() const { return static_cast<std::int64_t>(members.size()); }
};

// Length-T test outcomes; y[t] = 1 iff test t contains a defective item.
struct OutcomeVector {
  std::vector<std::uint8_t> y;
  std::int64_t size() const { return static_cast<std::int64_t>(y.size()); }
};

// Draw a T x n design with i.i.d. Bernoulli(p) entries from a deterministic
// stream; identical (inst, seed) always yields the identical matrix.
inline TestMatrix generate_design(const GroupTestInstance& inst,
                                  std::uint64_t seed) {
  TestMatrix X(inst.T, inst.n);
  Rng rng(seed, 0);
  const std::uint64_t thr = Rng::threshold_from_p(inst.p);
  for (std::int64_t t = 0; t < inst.T; ++t) {
    std::uint64_t* r = X.row(t);
    for (std::int64_t i = 0; i < inst.n; ++i) {
      if (rng.bernoulli(thr)) r[i >> 6] |= 1ULL << (i & 63);
    }
  }
  return X;
}

// y_t = OR over defective items of X[t, i].
inline OutcomeVector run_tests(const TestMatrix& X, const DefectiveSet& K) {
  for (std::int64_t i : K.members) {
    if (i < 0 || i >= X.cols())
      throw std::invalid_argument("run_tests: defective index out of range");
  }
  OutcomeVector out;
  out.y.resize(static_cast<std::size_t>(X.rows()), 0);
  for (std::int64_t t = 0; t < X.rows(); ++t) {
    const std::uint64_t* r = X.row(t);
    for (std::int64_t i : K.members) {
      if ((r[i >> 6] >> (i & 63)) & 1ULL) {
        out.y[static_cast<std::size_t>(t)] = 1;
        break;
      }
    }
  }
  return out;
}

}  // namespace grouptest
