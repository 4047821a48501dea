#pragma once

#include <stdexcept>
#include <string>

namespace grouptest {

// Base class for all library failures that are not plain precondition bugs.
class grouptest_error : public std::runtime_error {
 public:
  explicit grouptest_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A guard against computations whose cost would exceed a documented limit
// (e.g. the mixture-sum size cap for the exact pmf).
class resource_error : public grouptest_error {
 public:
  explicit resource_error(const std::string& msg) : grouptest_error(msg) {}
};

// Numerical failure: an iteration that did not converge, a quadrature
// segment that could not be resolved, and similar.
class numeric_error : public grouptest_error {
 public:
  explicit numeric_error(const std::string& msg) : grouptest_error(msg) {}
};

// Parameters for which the requested quantity does not exist (e.g. a
// negative-binomial moment fit when the distribution is not overdispersed).
class degenerate_error : public grouptest_error {
 public:
  explicit degenerate_error(const std::string& msg) : grouptest_error(msg) {}
};

}  // namespace grouptest
