#pragma once

#include <stdexcept>
#include <string>

namespace gaze {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind : int {
  validation = 1,  // bad input data or configuration
  io = 2,          // filesystem / stream failures
  internal = 3,    // invariant violation inside the library
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& message) {
  throw Error(ErrorKind::validation, message);
}

[[noreturn]] inline void fail_io(const std::string& message) {
  throw Error(ErrorKind::io, message);
}

[[noreturn]] inline void fail_internal(const std::string& message) {
  throw Error(ErrorKind::internal, message);
}

}  // namespace gaze
