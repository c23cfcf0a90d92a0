#pragma once

#include <stdexcept>
#include <string>

namespace replyset {

// Malformed or inconsistent input data (corpus lines, matrix files, ids).
// The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments. The CLI maps it to exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace replyset
