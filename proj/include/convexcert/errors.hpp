#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace convexcert {

// Inputs whose shape is wrong: mismatched variable spaces, arity errors,
// degree bounds too small to express a problem.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Problem-file and polynomial syntax errors. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + message),
        line_(line),
        column_(column),
        detail_(message) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

}  // namespace convexcert
