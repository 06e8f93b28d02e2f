#pragma once

#include <stdexcept>
#include <string>

namespace trafficgp {

/// Malformed or inconsistent input data (bad CSV row, empty dataset, ...).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Invalid run configuration; messages carry a JSON-pointer path to the
/// offending key. Mapped to exit code 2 by the CLI.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// A covariance matrix could not be factorized even after jitter escalation.
class ConditioningError : public std::runtime_error {
public:
  explicit ConditioningError(const std::string &msg)
      : std::runtime_error(msg) {}
};

} // namespace trafficgp
