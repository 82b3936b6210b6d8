#pragma once

#include <stdexcept>
#include <string>

namespace fpca {

// Base of every error raised by the library. Subclasses are grouped by how the
// CLI reports them: DataError subclasses map to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class BaseMismatchError : public Error {
 public:
  using Error::Error;
};

class NotSkewError : public Error {
 public:
  using Error::Error;
};

class NotOnManifoldError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

class InvalidBasisError : public Error {
 public:
  using Error::Error;
};

class IndefiniteError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NoModelError : public Error {
 public:
  using Error::Error;
};

class InvalidOptionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, long line)
      : DataError(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

}  // namespace fpca
