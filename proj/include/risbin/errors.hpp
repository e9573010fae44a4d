#pragma once

#include <stdexcept>
#include <string>

namespace risbin {

/// Invalid shapes, sizes or hyperparameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// API used out of order, e.g. backward() without a recorded forward pass.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite values reached a place where they must not propagate.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request the library declines because it is intractable
/// (exhaustive enumeration or per-configuration outputs over the cap).
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace risbin
