#pragma once

#include <stdexcept>
#include <string>

namespace ssmx {

// Shape/dimension mismatch between operands.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A stated precondition of an operation was violated.
struct ContractError : std::invalid_argument {
  explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Inconsistent configuration (grid tiling, strides, file contents).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ssmx
