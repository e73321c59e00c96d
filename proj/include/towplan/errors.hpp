#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace towplan {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("parse error at line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& field, const std::string& reason)
      : std::runtime_error("invalid " + field + ": " + reason), field_(field), reason_(reason) {}
  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

class ChecksumMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateEdge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GoalBlocked : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InconsistentGuess : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace towplan
