#pragma once

#include <stdexcept>
#include <string>

namespace koopman {

// Base class of every error raised by the library. Each failure mode has its
// own type so callers (and the CLI) can react to it without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class CenterMismatch : public Error {
 public:
  using Error::Error;
};

class AxisOutOfRange : public Error {
 public:
  using Error::Error;
};

class DegreeOverflow : public Error {
 public:
  DegreeOverflow(const std::string& what, int axis)
      : Error(what), axis_(axis) {}
  int axis() const { return axis_; }

 private:
  int axis_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class DefectiveJacobian : public Error {
 public:
  using Error::Error;
};

class ResonanceError : public Error {
 public:
  ResonanceError(const std::string& what, int order)
      : Error(what), order_(order) {}
  int order() const { return order_; }

 private:
  int order_;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

// Trajectory left the ball ‖x‖ ≤ escape radius.
class EscapeError : public Error {
 public:
  EscapeError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double escape_time() const { return time_; }

 private:
  double time_;
};

// Point cannot be expressed in the (θ, y) annulus coordinates.
class AnnulusError : public Error {
 public:
  AnnulusError(const std::string& what, double y) : Error(what), y_(y) {}
  double y() const { return y_; }

 private:
  double y_;
};

class LimitCycleError : public Error {
 public:
  using Error::Error;
};

class ParametrizationError : public Error {
 public:
  using Error::Error;
};

class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, double error)
      : Error(what), error_(error) {}
  double projection_error() const { return error_; }

 private:
  double error_;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace koopman
