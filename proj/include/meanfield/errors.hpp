#pragma once

#include <stdexcept>
#include <string>

namespace meanfield {

// Invalid or inconsistent configuration (bad field values, unknown/missing
// JSON keys, malformed flag combinations).  CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

// Inputs do not cover the requested computation (e.g. a time point beyond the
// stored flow horizon, a sample outside the density support).  CLI exit code 3.
class CoverageError : public std::runtime_error {
 public:
  explicit CoverageError(const std::string &what) : std::runtime_error(what) {}
};

// Numerical failure during a run (singular kernel system, non-positive sizes
// produced by an induction step, non-finite values).  CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

}  // namespace meanfield
