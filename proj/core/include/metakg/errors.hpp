#pragma once

#include <stdexcept>
#include <string>

namespace metakg {

// Bad input data: malformed files, unknown ids, infeasible generator specs.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-finite values, divergence. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace metakg
