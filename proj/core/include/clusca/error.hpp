#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace clusca {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Token index outside [0, T).
class BoundsError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value. `field()` names the offending setting.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// The cache state cannot serve the request made of it.
class PolicyError : public Error {
 public:
  using Error::Error;
};

// Non-finite or runaway values during sampling.
class NumericalError : public Error {
 public:
  NumericalError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace clusca
