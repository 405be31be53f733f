#pragma once

#include <stdexcept>
#include <string>

namespace crlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

struct NoBracketError : Error {
  using Error::Error;
};

struct ToleranceError : Error {
  using Error::Error;
};

struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& what, double best = 0.0)
      : Error(what), best_achievable(best) {}
  double best_achievable;
};

struct SaturationError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace crlab
