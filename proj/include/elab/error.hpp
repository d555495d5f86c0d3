#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elab {

/// Base of every error the library raises. The CLI maps the concrete
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced input file or artifact does not exist.
class MissingInputError : public Error {
 public:
  explicit MissingInputError(const std::string& path)
      : Error("missing input: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed record in a text input. line() is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input is well formed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between collaborating objects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numeric procedure could not produce a meaningful result.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace elab
