#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace swimlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeOutsideDomain : public Error {
 public:
  using Error::Error;
};

class OverlapViolation : public Error {
 public:
  OverlapViolation(int a, int b, double margin)
      : Error("parts " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
              " overlap (pair margin " + std::to_string(margin) + ")"),
        first(a),
        second(b) {}
  int first;
  int second;
};

class BoundaryViolation : public Error {
 public:
  BoundaryViolation(int part, int axis, bool upper, double margin)
      : Error("part " + std::to_string(part + 1) + " reaches the " + (upper ? "upper" : "lower") +
              " wall of axis " + std::to_string(axis) + " (clearance " + std::to_string(margin) + ")"),
        part(part),
        axis(axis),
        upper(upper) {}
  int part;
  int axis;
  bool upper;
};

class DegenerateShift : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class PoissonDivergence : public Error {
 public:
  using Error::Error;
};

class CflViolation : public Error {
 public:
  using Error::Error;
};

class NanDetected : public Error {
 public:
  using Error::Error;
};

class MissingBaselineData : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class MissingSensitivity : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double best, std::vector<double> history = {})
      : Error(what), best_residual(best), residuals(std::move(history)) {}
  double best_residual;
  std::vector<double> residuals;
};

class SeparationViolated : public Error {
 public:
  using Error::Error;
};

/// Scenario file problem; the message always names the key and the line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, int line, const std::string& what)
      : Error("config error at line " + std::to_string(line) + ", key '" + key + "': " + what),
        key(key),
        line(line) {}
  std::string key;
  int line;
};

}  // namespace swimlab
