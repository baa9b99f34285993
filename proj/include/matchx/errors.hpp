#pragma once

#include <stdexcept>
#include <string>

namespace matchx {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data problems. The CLI maps these to exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

class InvalidGraph : public DataError {
 public:
  using DataError::DataError;
};

class InvalidNodeSet : public DataError {
 public:
  using DataError::DataError;
};

class MissingLabel : public DataError {
 public:
  using DataError::DataError;
};

/// Malformed dataset or checkpoint file. The message carries the offending
/// location (byte offset or JSON path).
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class OracleTooLarge : public Error {
 public:
  using Error::Error;
};

class NoQualifiedCounterpart : public Error {
 public:
  using Error::Error;
};

class EmptySaliency : public Error {
 public:
  using Error::Error;
};

class EmptyCurve : public Error {
 public:
  using Error::Error;
};

class UndefinedRecall : public Error {
 public:
  using Error::Error;
};

// Reference set built with a different model than the one used to explain.
class ModelMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace matchx
