#pragma once

#include <stdexcept>
#include <string>

namespace sepred {

// Configuration / argument errors. CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data and I/O errors (missing files, bad container, checksum). Exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failures (rank deficiency, conditioning, divergence). Exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Channel generation gave up after the retry budget.
class GenerationError : public NumericError {
 public:
  explicit GenerationError(const std::string& msg) : NumericError(msg) {}
};

// Near-singular Gram matrix in ZF precoding.
class ConditioningError : public NumericError {
 public:
  explicit ConditioningError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace sepred
