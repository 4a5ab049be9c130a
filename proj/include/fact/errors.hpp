#pragma once

#include <stdexcept>
#include <string>

namespace fact {

/// File or stream level failure (missing file, malformed row).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Contract violation on inputs: shape mismatch, bad tree, bad index.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: divergence, non-finite values, degenerate systems.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fact
