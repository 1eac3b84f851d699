#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace expmult {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A function returned a non-finite value. `index` is the constraint index,
/// or -1 for the objective.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, int index) : Error(what), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

/// Problem-file syntax or semantic error with a 1-based source location.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// log of a nonpositive number, sqrt of a negative number, division by zero.
class DomainError : public Error {
 public:
  DomainError(const std::string& msg, std::size_t line, std::size_t column)
      : Error("domain error at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace expmult
