#pragma once

#include <stdexcept>
#include <string>

namespace railloc {

// Exit codes used by the CLI: 0 success, 2 config, 3 data, 4 numerical.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Precondition violations on library calls (out-of-range arclength,
// non-finite inputs, empty chains, ...).
struct DomainError : std::invalid_argument {
  explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace railloc
