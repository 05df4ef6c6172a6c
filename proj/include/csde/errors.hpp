#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. t not in [0, T]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad widths, unknown keys, mismatched shapes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A cache, gradient or buffer that does not belong to the parameters it is used with.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf or an undefined quantity (zero-norm cosine) showed up.
/// `step` is the reverse-SDE step index when known, otherwise npos.
class NumericalError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit NumericalError(const std::string& what, std::size_t step = npos)
      : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Optimisation diverged or received non-finite gradients.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace csde
