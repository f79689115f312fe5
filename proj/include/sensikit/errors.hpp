#pragma once

#include <stdexcept>
#include <string>

namespace sensikit {

// Base class for everything this library throws on purpose. Callers that
// want a single catch site can take this; the subclasses carry the context
// (pivot index, failed condition name, offending subexpression) in what().
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
  ParseError(const std::string& msg, int line, int column)
      : Error("parse error at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + msg),
        line(line), column(column) {}
  int line;
  int column;
};

// Evaluation hit a point outside an operation's domain (log/sqrt of a
// non-positive value, division by zero, fractional power of a non-positive
// base). The printed subexpression is embedded in the message.
class DomainError : public Error {
public:
  DomainError(const std::string& op, const std::string& subexpr)
      : Error("domain error in " + op + ": " + subexpr) {}
};

class SingularMatrixError : public Error {
public:
  SingularMatrixError(int pivot, const std::string& where)
      : Error(where + ": singular matrix, breakdown at pivot " +
              std::to_string(pivot)),
        pivot(pivot) {}
  int pivot;
};

class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& msg)
      : Error("dimension mismatch: " + msg) {}
};

// A precondition stated in terms of problem regularity failed: a constraint
// qualification could not be certified, a point is not stationary enough,
// a reduced Hessian is indefinite, and so on. `condition` names the failed
// requirement so the CLI can surface it.
class RegularityError : public Error {
public:
  RegularityError(const std::string& condition, const std::string& detail)
      : Error("regularity not certified: " + condition +
              (detail.empty() ? "" : " (" + detail + ")")),
        condition(condition) {}
  std::string condition;
};

class GuardExceededError : public Error {
public:
  explicit GuardExceededError(const std::string& msg)
      : Error("combinatorial guard exceeded: " + msg) {}
};

class InputError : public Error {
public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

}  // namespace sensikit
