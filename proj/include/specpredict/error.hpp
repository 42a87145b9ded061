#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace specpredict {

enum class Errc {
  InvalidArgument,
  DegenerateChain,
  InsufficientData,
  FrequencyOutOfRange,
  DistanceOutOfRange,
  EnvironmentUnsupported,
  ParseError,
  NonMonotoneDistances,
  InvalidBracket,
  Validation,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Malformed input text. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(Errc::ParseError, line ? "line " + std::to_string(line) + ": " + message
                                     : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Scenario document rejected; `path()` is the JSON path of the offending field,
/// e.g. `markov.lambda` or `users[2].distance_km`.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& message)
      : Error(Errc::Validation, path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace specpredict
