#pragma once

#include <stdexcept>
#include <string>

namespace bzmarble {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDomain : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidProbe : public Error {
 public:
  using Error::Error;
};

class InvalidThreshold : public Error {
 public:
  using Error::Error;
};

class InvalidBracket : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class NoFixedPoint : public Error {
 public:
  using Error::Error;
};

class ClassificationImpossible : public Error {
 public:
  using Error::Error;
};

/// Config text could not be turned into a ScenarioConfig. `line` is 1-based,
/// 0 when the problem is not tied to a single line (e.g. a missing key).
class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// The explicit integrator produced a non-finite or out-of-range value.
class BlowUpError : public Error {
 public:
  BlowUpError(long step, int x, int y, double u, double v)
      : Error("blow-up at step " + std::to_string(step) + ", cell (" + std::to_string(x) + "," +
              std::to_string(y) + "): u=" + std::to_string(u) + " v=" + std::to_string(v)),
        step_(step),
        x_(x),
        y_(y) {}
  long step() const noexcept { return step_; }
  int x() const noexcept { return x_; }
  int y() const noexcept { return y_; }

 private:
  long step_;
  int x_;
  int y_;
};

}  // namespace bzmarble
