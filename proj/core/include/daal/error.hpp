#pragma once

#include <stdexcept>
#include <string>

namespace daal {

// Malformed or inconsistent input: dimension mismatches, bad files, empty
// cohorts. The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: degenerate objective, non-convergence, failed gradient
// check. The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace daal
