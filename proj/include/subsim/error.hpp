#pragma once

#include <stdexcept>
#include <string>

namespace subsim {

// Exit codes used by the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept = 0;
  virtual const char* kind() const noexcept = 0;
};

/// Malformed or inconsistent configuration (regimes, scenario, population spec).
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitConfig; }
  const char* kind() const noexcept override { return "config"; }
};

/// Input records that violate a schema or a domain range.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitData; }
  const char* kind() const noexcept override { return "data"; }
};

/// Rank deficiency, degenerate clustering and similar estimation failures.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitNumerical; }
  const char* kind() const noexcept override { return "numerical"; }
};

}  // namespace subsim
