#pragma once

#include <stdexcept>
#include <string>

namespace varbench {

// A caller broke a documented precondition (dimension mismatch, negative
// weight, out-of-range parameter).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A matrix that must be positive definite failed factorization or a solve
// residual check.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configured size cap (net cardinality, memory budget) would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VARBENCH_REQUIRE(cond, msg)                                  \
  do {                                                               \
    if (!(cond)) throw ::varbench::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace varbench
