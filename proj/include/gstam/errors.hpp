#pragma once

#include <stdexcept>
#include <string>

namespace gstam {

// Base for every recoverable error raised by the library. The CLI maps the
// concrete subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Misuse of an API contract (e.g. backward from a non-scalar root).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace gstam
