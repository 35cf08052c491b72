#pragma once

#include <stdexcept>
#include <string>

namespace nvsim {

// Bad input: malformed arguments, violated preconditions, unknown keys.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine could not deliver its postcondition (non-convergence,
// singular system, no root in the search window).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nvsim
