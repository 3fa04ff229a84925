#pragma once

#include <stdexcept>
#include <string>

namespace anomforge {

enum class ErrorKind {
  Usage,
  Parse,
  Validation,
  Provider,
  Io,
};

// Single exception type for the library. The kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error parse_error(const std::string& what) { return {ErrorKind::Parse, what}; }
inline Error validation_error(const std::string& what) { return {ErrorKind::Validation, what}; }
inline Error provider_error(const std::string& what) { return {ErrorKind::Provider, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::Io, what}; }

// 0 success, 1 usage, 2 validation (and parse), 3 provider failure, 4 I/O.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Parse:
    case ErrorKind::Validation: return 2;
    case ErrorKind::Provider: return 3;
    case ErrorKind::Io: return 4;
  }
  return 1;
}

}  // namespace anomforge
