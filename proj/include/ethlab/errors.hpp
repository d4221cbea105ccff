// Error types shared across the library. The CLI maps these onto exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace ethlab {

/// Base class for all ethlab errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Mismatched or overflowing matrix/vector dimensions.
class dimension_error : public error {
 public:
  explicit dimension_error(const std::string& msg) : error(msg) {}
};

/// Numerical failure: solver non-convergence, empty energy window,
/// unreachable bracket targets, invariant violations of computed data.
class numeric_error : public error {
 public:
  explicit numeric_error(const std::string& msg) : error(msg) {}
};

/// Invalid experiment configuration (schema or value errors).
class config_error : public error {
 public:
  explicit config_error(const std::string& msg) : error(msg) {}
};

/// Filesystem failures while reading configs or writing results.
class io_error : public error {
 public:
  explicit io_error(const std::string& msg) : error(msg) {}
};

}  // namespace ethlab
