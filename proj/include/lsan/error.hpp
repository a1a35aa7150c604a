#pragma once

#include <stdexcept>
#include <string>

namespace lsan {

/// Shape or index contract violated by a caller.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN/Inf appeared in a forward or backward pass, or an operand was
/// numerically invalid (e.g. a zero denominator).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every position of an attention/softmax row was masked out.
class EmptyAttentionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (FASTA, label files, corpora).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration. `key()` names the offending setting when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace lsan
