#pragma once

#include <stdexcept>
#include <string>

namespace posmod {

// Base class for all errors thrown by this library.  Outcomes that are part
// of normal operation (non-membership, solver UNKNOWN, ...) are reported as
// status values, never as exceptions.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Text input rejected; carries 1-based line/column of the offending token.
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line(line), column(column) {}
  int line;
  int column;
};

// Operands live over different ambient variable lists.
class VarMismatchError : public Error {
public:
  using Error::Error;
};

// A size guard was exceeded (e.g. preordering generator count).
class CapacityError : public Error {
public:
  using Error::Error;
};

// Degree preconditions violated; `required_d` is the smallest admissible
// truncation degree for the rejected request.
class DegreeError : public Error {
public:
  DegreeError(const std::string& what, int required_d)
      : Error(what), required_d(required_d) {}
  int required_d;
};

// Internal invariant violation; indicates a bug, not bad input.
class InternalError : public Error {
public:
  using Error::Error;
};

}  // namespace posmod
