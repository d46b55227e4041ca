#pragma once

#include <stdexcept>
#include <string>

namespace ccepc {

// Error categories map one-to-one onto the CLI exit-code contract:
// configuration/schema problems exit 2, estimation failures 3, I/O 4.
enum class ErrorKind {
  Config,
  Schema,
  Ingestion,
  Specification,
  Estimation,
  Degenerate,
  IO,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Schema:
    case ErrorKind::Ingestion:
    case ErrorKind::Specification:
      return 2;
    case ErrorKind::Estimation:
    case ErrorKind::Degenerate:
      return 3;
    case ErrorKind::IO:
      return 4;
  }
  return 1;
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Ingestion: return "ingestion";
    case ErrorKind::Specification: return "specification";
    case ErrorKind::Estimation: return "estimation";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::IO: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace ccepc
