#pragma once

#include <stdexcept>
#include <string>

namespace osb {

// Malformed input: bad configuration, out-of-range argument, corrupt or
// mismatched file. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation that could not complete on valid input (I/O, numerics).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace osb
