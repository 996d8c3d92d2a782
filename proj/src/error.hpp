#pragma once

#include <stdexcept>
#include <string>

namespace cwss {

/// Error categories. They map one-to-one onto the C API status codes and,
/// through those, onto CLI exit codes.
enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  numeric,
  not_converged,
  io,
  schema,
  property_failure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace cwss
