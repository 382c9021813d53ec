#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairuse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: missing files, invalid parameter combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data. Carries the 1-based line number when the source is
// a line-delimited file (0 when not applicable).
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg, std::size_t line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Remote endpoint unreachable after the configured retry budget.
class TransportError : public Error {
 public:
  using Error::Error;
};

// A remote reply arrived but could not be interpreted. Carries the raw reply.
class ReplyParseError : public Error {
 public:
  ReplyParseError(const std::string& msg, std::string raw_reply)
      : Error(msg), raw_reply_(std::move(raw_reply)) {}
  const std::string& raw_reply() const { return raw_reply_; }

 private:
  std::string raw_reply_;
};

}  // namespace fairuse
