#pragma once

#include <stdexcept>
#include <string>

namespace adaptlm {

// Categories map one-to-one onto the C API status codes and CLI exit codes.
enum class ErrorKind {
  usage,           // bad configuration or arguments
  shape,           // tensor dimension mismatch
  invalid_argument,
  data_invariant,  // corpus/stimulus/record invariants violated
  format,          // malformed or mismatched file contents
  io,
  diverged,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace adaptlm
