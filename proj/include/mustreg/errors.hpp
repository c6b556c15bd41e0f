#ifndef MUSTREG_ERRORS_HPP
#define MUSTREG_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mustreg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSampleSet : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class InvalidCharge : public Error {
 public:
  using Error::Error;
};

/// The gradient handed to a step computation is exactly zero.
class StationaryGradient : public Error {
 public:
  using Error::Error;
};

/// Predicted model decrease is not positive; the iteration cannot be scored.
class DegenerateModelDecrease : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  /// 1-based line number, 0 when the error is not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mustreg

#endif  // MUSTREG_ERRORS_HPP
