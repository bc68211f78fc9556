#pragma once

#include <stdexcept>
#include <string>

namespace qbil {

/// Broad failure categories. The CLI maps each one to its own exit code.
enum class ErrorKind {
  kInvalidInput,  // violated precondition or geometry constraint
  kConfig,        // config file syntax, unknown/missing keys, bad types
  kNumeric,       // non-finite values, non-convergence
  kIo,            // file system and binary format problems
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kNumeric:
      return 3;
    case ErrorKind::kIo:
      return 4;
    case ErrorKind::kInvalidInput:
      return 5;
  }
  return 1;
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::kInvalidInput, what);
}

}  // namespace qbil
