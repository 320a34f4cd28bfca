#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fedhin {

enum class ErrorKind {
  parse,
  validation,
  empty_type,
  index,
  shape,
  numeric,
  config,
  staleness,
  registration,
  empty,
  io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can emit a
// machine-readable error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::parse,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fedhin
