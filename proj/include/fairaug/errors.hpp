#pragma once

#include <stdexcept>
#include <string>

namespace fairaug {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; the message carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that the pipeline cannot use (missing attribute,
// unsupported grouping, empty data, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Violated precondition of a library call.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A sampling policy or candidate space produced nothing to work with.
class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairaug
