#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tbaopt {

// A caller violated a documented precondition (bad space definition,
// invalid configuration handed to a benchmark, unknown name, ...).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed wire-protocol line. `offset` is the byte offset of the problem
// within the line.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// External evaluator could not be reached or died. Distinct from a crash,
// which is a legitimate trial outcome.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A run log could not be written.
class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed JSONL log. `line` is 1-based.
class LogFormatError : public std::runtime_error {
 public:
  LogFormatError(const std::string& what, std::size_t line)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tbaopt
