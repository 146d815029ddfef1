#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pedteach {

/// Root of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed regex pattern. `offset` is the byte index where parsing failed.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& message)
      : Error("syntax error at offset " + std::to_string(offset) + ": " + message),
        offset_(offset),
        message_(message) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t offset_;
  std::string message_;
};

/// Malformed record in a dataset file. `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnknownRule : public Error {
 public:
  explicit UnknownRule(const std::string& rule_id)
      : Error("unknown rule: " + rule_id), rule_id_(rule_id) {}

  const std::string& rule_id() const noexcept { return rule_id_; }

 private:
  std::string rule_id_;
};

/// Every corpus in a teacher pool has zero prior weight for the taught rule.
class DegeneratePool : public Error {
 public:
  using Error::Error;
};

class PoolMissingCorpus : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class MissingDistractorCorpora : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class InvalidString : public Error {
 public:
  using Error::Error;
};

class UnknownSession : public Error {
 public:
  explicit UnknownSession(const std::string& id) : Error("unknown session: " + id) {}
};

class NoTargetDeclared : public Error {
 public:
  NoTargetDeclared() : Error("session has no declared teaching target") {}
};

}  // namespace pedteach
