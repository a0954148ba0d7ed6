#pragma once

#include <stdexcept>
#include <string>

namespace bdd {

/// Shape or parameter mismatch in a call.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Input is valid in shape but carries no information (zero vectors, zero truth).
class DegenerateInput : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared during an iteration.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Fixed-step descent blew up; a smaller step is needed.
class DivergenceError : public NumericalFailure {
public:
  using NumericalFailure::NumericalFailure;
};

/// Output could not be written or input could not be read.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace bdd
