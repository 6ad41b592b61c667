#pragma once

#include <stdexcept>
#include <string>

#include "dahr/types.hpp"

namespace dahr {

/// The design (or a Gram matrix built from it) cannot be inverted reliably.
class SingularDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs are well-formed but carry no information, e.g. all-zero residuals.
class DegenerateInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver produced a non-finite value or blew past a safeguard.
/// The last finite iterate is kept so callers can report where it broke.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, Coefficients last_iterate)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}

  const Coefficients& last_iterate() const noexcept { return last_iterate_; }

 private:
  Coefficients last_iterate_;
};

}  // namespace dahr
