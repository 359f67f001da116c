#pragma once

#include <stdexcept>
#include <string>

namespace hpelm {

// Exception families map one-to-one onto CLI exit codes
// (config = 2, data = 3, numeric = 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A ranking method applied outside its domain (e.g. F-score on 3 classes).
class MethodDomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number of the offending row.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularSystemError : public NumericError {
 public:
  SingularSystemError(const std::string& what, double last_ridge)
      : NumericError(what), last_ridge_(last_ridge) {}
  double last_ridge() const noexcept { return last_ridge_; }

 private:
  double last_ridge_;
};

}  // namespace hpelm
