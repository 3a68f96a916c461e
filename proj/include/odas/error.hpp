#pragma once

#include <stdexcept>
#include <string>

namespace odas {

enum class ErrorKind {
  shape,          // dimension mismatch between a tensor and a layer
  state,          // operation called out of order (e.g. backward before forward)
  invalid_batch,  // batch too small for batch statistics
  divergence,     // non-finite loss or gradient during training
  format,         // malformed file or annotation
  config,         // invalid configuration values
  data,           // empty or inconsistent training data
  stream,         // non-monotonic streaming input
  input,          // invalid evaluation input
  contract,       // caller violated a documented precondition
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape: return "shape error";
    case ErrorKind::state: return "state error";
    case ErrorKind::invalid_batch: return "invalid batch";
    case ErrorKind::divergence: return "training divergence";
    case ErrorKind::format: return "format error";
    case ErrorKind::config: return "config error";
    case ErrorKind::data: return "data error";
    case ErrorKind::stream: return "stream error";
    case ErrorKind::input: return "input error";
    case ErrorKind::contract: return "contract violation";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures caused by numerics rather than by bad input.
  bool numerical() const noexcept { return kind_ == ErrorKind::divergence; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace odas
