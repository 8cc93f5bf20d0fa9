#pragma once

#include <stdexcept>
#include <string>

namespace meg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument values (ranks out of range, eps outside (0, 3/4], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// An operation's documented precondition does not hold for its inputs.
class PreconditionError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A quantity was requested that the current solver mode does not compute.
class ModeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace meg
