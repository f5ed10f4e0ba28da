#pragma once

#include <stdexcept>
#include <string>

namespace gjs {

// Base for everything the library throws. The CLI maps InputError to exit
// code 2 and NumericalError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: wrong dimensions, out-of-range parameters, bad files.
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

class UnsupportedError : public InputError {
 public:
  using InputError::InputError;
};

// Valid inputs on which the arithmetic broke down.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& what, double condition_number)
      : NumericalError(what + " (condition number " + std::to_string(condition_number) + ")"),
        condition_number_(condition_number) {}

  double condition_number() const { return condition_number_; }

 private:
  double condition_number_;
};

class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, double achieved)
      : NumericalError(what + " (achieved estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}

  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

}  // namespace gjs
