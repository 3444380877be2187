#pragma once
#include <stdexcept>
#include <string>

namespace scmil {

// Base for everything thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix/tensor dimensions do not line up.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Bad hyperparameter or model configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Scalar argument outside the mathematical domain (e.g. nonpositive time).
class DomainError : public Error {
public:
  using Error::Error;
};

// API called in an order it does not support (e.g. optimizer step before
// any backward pass).
class StateError : public Error {
public:
  using Error::Error;
};

// Malformed binary/text file.
class FormatError : public Error {
public:
  using Error::Error;
};

// Semantically invalid input data (manifest rows, configs from disk).
class ValidationError : public Error {
public:
  using Error::Error;
};

// A metric has no defined value on the given cohort.
class UndefinedMetricError : public Error {
public:
  using Error::Error;
};

}  // namespace scmil
