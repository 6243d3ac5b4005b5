#pragma once

#include <stdexcept>
#include <string>

namespace mcan {

// Error categories map onto the CLI exit codes: configuration and input
// problems are data errors (2), numerical faults are 3.
enum class ErrorKind {
  config,
  input,
  parse,
  out_of_range,
  undecodable,
  unreachable,
  timeout,
  io,
  numerical_fault,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "configuration error";
    case ErrorKind::input: return "input error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::out_of_range: return "out of range";
    case ErrorKind::undecodable: return "undecodable activity";
    case ErrorKind::unreachable: return "unreachable";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::numerical_fault: return "numerical fault";
  }
  return "error";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace mcan
